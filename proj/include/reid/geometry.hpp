#pragma once

#include <cstddef>
#include <vector>

#include "reid/tensorio.hpp"

namespace reid {

// Power-mean exponent for GeM pooling. p = 1 is average pooling and the
// output approaches max pooling as p grows.
struct GemParams {
  double p = 3.0;
};

// H x W x C row-major post-activation map; every element is >= 0.
class FeatureMap {
 public:
  FeatureMap(std::size_t height, std::size_t width, std::size_t channels,
             std::vector<float> data);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  std::span<const float> data() const { return data_; }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return data_[(y * width_ + x) * channels_ + c];
  }

 private:
  std::size_t height_;
  std::size_t width_;
  std::size_t channels_;
  std::vector<float> data_;
};

// Unit L2 norm per row; all-zero rows are returned unchanged.
FeatureMatrix l2_normalize(const FeatureMatrix& m);

// Entry (i, j) = ||q_i - g_j||_2, computed as sqrt(max(0, |q|^2 + |g|^2 -
// 2 q.g)) in double precision. Each entry depends only on its two rows, so
// the result is deterministic and exactly symmetric for q == g.
DistanceMatrix euclidean_distances(const FeatureMatrix& q,
                                   const FeatureMatrix& g);

// Entry (i, j) = 1 - cos(q_i, g_j), clamped to [0, 2]. A zero row is at
// distance 1 from everything.
DistanceMatrix cosine_distances(const FeatureMatrix& q, const FeatureMatrix& g);

// Test-time augmentation: elementwise mean of the features of an image and
// of its horizontal flip.
FeatureMatrix fuse_flip_features(const FeatureMatrix& orig,
                                 const FeatureMatrix& flipped);

// Per channel: ((1 / HW) * sum x^p)^(1/p).
std::vector<float> gem_pool(const FeatureMap& fm, const GemParams& params = {});

// Row-wise concatenation; dims must match.
FeatureMatrix concat_rows(const FeatureMatrix& a, const FeatureMatrix& b);

}  // namespace reid
