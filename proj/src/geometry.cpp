#include "reid/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "reid/errors.hpp"

namespace reid {

namespace {

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    s += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  }
  return s;
}

void require_same_dims(const FeatureMatrix& q, const FeatureMatrix& g) {
  if (q.dims() != g.dims()) {
    throw ShapeError("dimension mismatch: " + std::to_string(q.dims()) +
                     " vs " + std::to_string(g.dims()));
  }
}

std::vector<double> squared_norms(const FeatureMatrix& m) {
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = dot(m.row(i), m.row(i));
  return out;
}

}  // namespace

FeatureMap::FeatureMap(std::size_t height, std::size_t width,
                       std::size_t channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels),
      data_(std::move(data)) {
  if (height_ == 0 || width_ == 0 || channels_ == 0) {
    throw ShapeError("feature map dimensions must be positive");
  }
  if (data_.size() != height_ * width_ * channels_) {
    throw ShapeError("feature map data length does not match H*W*C");
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw DataError("feature map has a non-finite element");
    if (v < 0.0f) throw DataError("feature map has a negative element");
  }
}

FeatureMatrix l2_normalize(const FeatureMatrix& m) {
  std::vector<float> out(m.data().begin(), m.data().end());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double norm = std::sqrt(dot(m.row(i), m.row(i)));
    if (norm == 0.0) continue;
    float* row = out.data() + i * m.dims();
    for (std::size_t k = 0; k < m.dims(); ++k) {
      row[k] = static_cast<float>(row[k] / norm);
    }
  }
  return FeatureMatrix(m.rows(), m.dims(), std::move(out));
}

DistanceMatrix euclidean_distances(const FeatureMatrix& q,
                                   const FeatureMatrix& g) {
  require_same_dims(q, g);
  const auto qn = squared_norms(q);
  const auto gn = squared_norms(g);
  std::vector<float> out(q.rows() * g.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < g.rows(); ++j) {
      const double sq = qn[i] + gn[j] - 2.0 * dot(q.row(i), g.row(j));
      out[i * g.rows() + j] = static_cast<float>(std::sqrt(std::max(sq, 0.0)));
    }
  }
  return DistanceMatrix(q.rows(), g.rows(), std::move(out));
}

DistanceMatrix cosine_distances(const FeatureMatrix& q, const FeatureMatrix& g) {
  require_same_dims(q, g);
  const auto qn = squared_norms(q);
  const auto gn = squared_norms(g);
  std::vector<float> out(q.rows() * g.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < g.rows(); ++j) {
      double d = 1.0;
      if (qn[i] > 0.0 && gn[j] > 0.0) {
        d = 1.0 - dot(q.row(i), g.row(j)) / std::sqrt(qn[i] * gn[j]);
      }
      out[i * g.rows() + j] = static_cast<float>(std::clamp(d, 0.0, 2.0));
    }
  }
  return DistanceMatrix(q.rows(), g.rows(), std::move(out));
}

FeatureMatrix fuse_flip_features(const FeatureMatrix& orig,
                                 const FeatureMatrix& flipped) {
  if (orig.rows() != flipped.rows() || orig.dims() != flipped.dims()) {
    throw ShapeError("flip features must have the same shape as the originals");
  }
  std::vector<float> out(orig.data().size());
  const auto a = orig.data();
  const auto b = flipped.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(0.5 * (static_cast<double>(a[i]) + b[i]));
  }
  return FeatureMatrix(orig.rows(), orig.dims(), std::move(out));
}

std::vector<float> gem_pool(const FeatureMap& fm, const GemParams& params) {
  if (!(params.p >= 1.0) || !std::isfinite(params.p)) {
    throw ConfigError("GeM exponent p must be finite and >= 1");
  }
  const std::size_t hw = fm.height() * fm.width();
  const std::size_t nc = fm.channels();
  const auto data = fm.data();
  std::vector<float> out(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    if (params.p == 1.0) {
      double s = 0.0;
      for (std::size_t i = 0; i < hw; ++i) s += data[i * nc + c];
      out[c] = static_cast<float>(s / static_cast<double>(hw));
      continue;
    }
    // Scale by the channel max so large p cannot overflow.
    double mx = 0.0;
    for (std::size_t i = 0; i < hw; ++i) mx = std::max(mx, static_cast<double>(data[i * nc + c]));
    if (mx == 0.0) {
      out[c] = 0.0f;
      continue;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) s += std::pow(data[i * nc + c] / mx, params.p);
    out[c] = static_cast<float>(mx * std::pow(s / static_cast<double>(hw), 1.0 / params.p));
  }
  return out;
}

FeatureMatrix concat_rows(const FeatureMatrix& a, const FeatureMatrix& b) {
  require_same_dims(a, b);
  std::vector<float> out;
  out.reserve(a.data().size() + b.data().size());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  return FeatureMatrix(a.rows() + b.rows(), a.dims(), std::move(out));
}

}  // namespace reid
