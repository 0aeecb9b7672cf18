#include "reid/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reid/errors.hpp"

namespace reid {

namespace {

double euclid(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// log(sum exp(v)) for non-empty v.
double log_sum_exp(const std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct CirclePair {
  std::size_t i;
  std::size_t j;
  double s;
  double logit;
  double dlogit_ds;
};

// Pair logits for the circle loss. Positive pairs use
// -gamma * a_p * (s - (1 - m)), negatives gamma * a_n * (s - m).
void circle_pairs(const LossBatch& b, const CircleParams& p,
                  std::vector<CirclePair>& pos, std::vector<CirclePair>& neg,
                  std::vector<double>& norms) {
  const std::size_t n = b.size();
  norms.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = std::sqrt(dot(b.row(i), b.row(i)));
    if (norms[i] == 0.0) {
      throw DataError("circle loss needs non-zero embeddings; row " +
                      std::to_string(i) + " is zero");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = dot(b.row(i), b.row(j)) / (norms[i] * norms[j]);
      if (b.labels()[i] == b.labels()[j]) {
        const double alpha = std::max(1.0 + p.m - s, 0.0);
        const double logit = -p.gamma * alpha * (s - (1.0 - p.m));
        // d/ds of -gamma (1+m-s)(s-1+m) while alpha > 0.
        const double dl = alpha > 0.0 ? -2.0 * p.gamma * (1.0 - s) : 0.0;
        pos.push_back({i, j, s, logit, dl});
      } else {
        const double alpha = std::max(s + p.m, 0.0);
        const double logit = p.gamma * alpha * (s - p.m);
        const double dl = alpha > 0.0 ? 2.0 * p.gamma * s : 0.0;
        neg.push_back({i, j, s, logit, dl});
      }
    }
  }
}

void triplet_grad(const LossBatch& b, const TripletParams& p, double weight,
                  std::vector<double>& g) {
  const std::size_t n = b.size();
  const std::size_t d = b.dims();
  const auto pairs = batch_hard_pairs(b);
  const double scale = weight / static_cast<double>(n);
  for (std::size_t a = 0; a < n; ++a) {
    const HardPair& hp = pairs[a];
    if (hp.pos < 0 || hp.neg < 0) {
      throw BatchError("anchor " + std::to_string(a) + " with label " +
                       std::to_string(b.labels()[a]) +
                       " lacks a positive or a negative");
    }
    if (hp.d_pos - hp.d_neg + p.margin <= 0.0) continue;
    const auto xa = b.row(a);
    const auto xp = b.row(static_cast<std::size_t>(hp.pos));
    const auto xn = b.row(static_cast<std::size_t>(hp.neg));
    double* ga = g.data() + a * d;
    double* gp = g.data() + static_cast<std::size_t>(hp.pos) * d;
    double* gn = g.data() + static_cast<std::size_t>(hp.neg) * d;
    for (std::size_t k = 0; k < d; ++k) {
      if (hp.d_pos > 0.0) {
        const double u = scale * (xa[k] - xp[k]) / hp.d_pos;
        ga[k] += u;
        gp[k] -= u;
      }
      if (hp.d_neg > 0.0) {
        const double v = scale * (xa[k] - xn[k]) / hp.d_neg;
        ga[k] -= v;
        gn[k] += v;
      }
    }
  }
}

void circle_grad(const LossBatch& b, const CircleParams& p, double weight,
                 std::vector<double>& g) {
  std::vector<CirclePair> pos, neg;
  std::vector<double> norms;
  circle_pairs(b, p, pos, neg, norms);
  if (pos.empty() || neg.empty()) return;

  std::vector<double> lp, ln;
  for (const auto& q : pos) lp.push_back(q.logit);
  for (const auto& q : neg) ln.push_back(q.logit);
  const double lse_p = log_sum_exp(lp);
  const double lse_n = log_sum_exp(ln);
  const double outer = weight * sigmoid(lse_p + lse_n);

  const std::size_t d = b.dims();
  auto accumulate = [&](const CirclePair& q, double lse) {
    // softmax weight of this pair times dlogit/ds
    const double coef = outer * std::exp(q.logit - lse) * q.dlogit_ds;
    if (coef == 0.0) return;
    const auto xi = b.row(q.i);
    const auto xj = b.row(q.j);
    const double ni = norms[q.i], nj = norms[q.j];
    double* gi = g.data() + q.i * d;
    double* gj = g.data() + q.j * d;
    for (std::size_t k = 0; k < d; ++k) {
      gi[k] += coef * (xj[k] / (ni * nj) - q.s * xi[k] / (ni * ni));
      gj[k] += coef * (xi[k] / (ni * nj) - q.s * xj[k] / (nj * nj));
    }
  };
  for (const auto& q : pos) accumulate(q, lse_p);
  for (const auto& q : neg) accumulate(q, lse_n);
}

}  // namespace

void validate(const TripletParams& p) {
  if (!(p.margin >= 0.0) || !std::isfinite(p.margin)) {
    throw ConfigError("triplet margin must be finite and >= 0");
  }
}

void validate(const CircleParams& p) {
  if (!(p.m > 0.0 && p.m < 1.0)) throw ConfigError("circle m must lie in (0, 1)");
  if (!(p.gamma > 0.0) || !std::isfinite(p.gamma)) {
    throw ConfigError("circle gamma must be finite and > 0");
  }
}

void validate(const CombinedParams& p) {
  if (!(p.w_triplet >= 0.0) || !(p.w_circle >= 0.0) ||
      !(p.w_triplet + p.w_circle > 0.0)) {
    throw ConfigError("loss weights must be >= 0 with a positive sum");
  }
  validate(p.triplet);
  validate(p.circle);
}

LossBatch::LossBatch(const FeatureMatrix& embeddings,
                     std::vector<std::uint32_t> labels)
    : LossBatch(embeddings.rows(), embeddings.dims(),
                std::vector<double>(embeddings.data().begin(),
                                    embeddings.data().end()),
                std::move(labels)) {}

LossBatch::LossBatch(std::size_t n, std::size_t dims,
                     std::vector<double> embeddings,
                     std::vector<std::uint32_t> labels)
    : n_(n), dims_(dims), x_(std::move(embeddings)), labels_(std::move(labels)) {
  if (n_ < 2) throw BatchError("a loss batch needs at least 2 samples");
  if (dims_ == 0 || x_.size() != n_ * dims_) {
    throw ShapeError("loss batch embeddings do not match n x d");
  }
  if (labels_.size() != n_) throw ShapeError("one label per embedding required");
  for (double v : x_) {
    if (!std::isfinite(v)) throw DataError("loss batch has a non-finite embedding");
  }
}

std::vector<HardPair> batch_hard_pairs(const LossBatch& b) {
  const std::size_t n = b.size();
  std::vector<HardPair> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    HardPair& hp = out[a];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == a) continue;
      const double dist = euclid(b.row(a), b.row(j));
      if (b.labels()[j] == b.labels()[a]) {
        if (hp.pos < 0 || dist > hp.d_pos) {
          hp.pos = static_cast<std::ptrdiff_t>(j);
          hp.d_pos = dist;
        }
      } else if (hp.neg < 0 || dist < hp.d_neg) {
        hp.neg = static_cast<std::ptrdiff_t>(j);
        hp.d_neg = dist;
      }
    }
  }
  return out;
}

TripletResult triplet_loss_batch_hard(const LossBatch& batch,
                                      const TripletParams& params) {
  validate(params);
  const auto pairs = batch_hard_pairs(batch);
  TripletResult r;
  r.per_anchor.resize(batch.size());
  double sum = 0.0;
  for (std::size_t a = 0; a < batch.size(); ++a) {
    const HardPair& hp = pairs[a];
    if (hp.pos < 0 || hp.neg < 0) {
      throw BatchError("anchor " + std::to_string(a) + " with label " +
                       std::to_string(batch.labels()[a]) +
                       (hp.pos < 0 ? " has no positive" : " has no negative"));
    }
    r.per_anchor[a] = std::max(hp.d_pos - hp.d_neg + params.margin, 0.0);
    sum += r.per_anchor[a];
  }
  r.loss = sum / static_cast<double>(batch.size());
  return r;
}

double circle_loss(const LossBatch& batch, const CircleParams& params) {
  validate(params);
  std::vector<CirclePair> pos, neg;
  std::vector<double> norms;
  circle_pairs(batch, params, pos, neg, norms);
  if (pos.empty() || neg.empty()) return 0.0;
  std::vector<double> lp, ln;
  for (const auto& q : pos) lp.push_back(q.logit);
  for (const auto& q : neg) ln.push_back(q.logit);
  return softplus(log_sum_exp(lp) + log_sum_exp(ln));
}

double combined_loss(const LossBatch& batch, const CombinedParams& params) {
  validate(params);
  double total = 0.0;
  if (params.w_triplet > 0.0) {
    total += params.w_triplet * triplet_loss_batch_hard(batch, params.triplet).loss;
  }
  if (params.w_circle > 0.0) {
    total += params.w_circle * circle_loss(batch, params.circle);
  }
  return total;
}

Gradient loss_gradient(const LossBatch& batch, const CombinedParams& params) {
  validate(params);
  Gradient g;
  g.rows = batch.size();
  g.dims = batch.dims();
  g.data.assign(g.rows * g.dims, 0.0);
  if (params.w_triplet > 0.0) triplet_grad(batch, params.triplet, params.w_triplet, g.data);
  if (params.w_circle > 0.0) circle_grad(batch, params.circle, params.w_circle, g.data);
  return g;
}

}  // namespace reid
