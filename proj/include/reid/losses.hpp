#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "reid/tensorio.hpp"

namespace reid {

struct TripletParams {
  double margin = 0.4;
};

// Circle loss with relaxation factor m: optima O_p = 1 + m, O_n = -m and
// margins Delta_p = 1 - m, Delta_n = m. gamma scales the logits.
struct CircleParams {
  double m = 0.4;
  double gamma = 64.0;
};

// L = w_triplet * L_triplet + w_circle * L_circle.
struct CombinedParams {
  double w_triplet = 1.0;
  double w_circle = 1.0;
  TripletParams triplet;
  CircleParams circle;
};

void validate(const TripletParams& p);
void validate(const CircleParams& p);
void validate(const CombinedParams& p);

// Embeddings plus identity labels. Embeddings are held in double precision
// so finite-difference probes are not limited by float rounding.
class LossBatch {
 public:
  LossBatch(const FeatureMatrix& embeddings, std::vector<std::uint32_t> labels);
  LossBatch(std::size_t n, std::size_t dims, std::vector<double> embeddings,
            std::vector<std::uint32_t> labels);

  std::size_t size() const { return n_; }
  std::size_t dims() const { return dims_; }
  std::span<const double> row(std::size_t i) const {
    return {x_.data() + i * dims_, dims_};
  }
  std::span<const double> embeddings() const { return x_; }
  const std::vector<std::uint32_t>& labels() const { return labels_; }

 private:
  std::size_t n_;
  std::size_t dims_;
  std::vector<double> x_;
  std::vector<std::uint32_t> labels_;
};

struct TripletResult {
  double loss = 0.0;
  std::vector<double> per_anchor;
};

// Per anchor a: [max_pos d(a,p) - min_neg d(a,n) + margin]_+ with Euclidean
// d; loss is the mean over anchors. Throws BatchError if an anchor has no
// positive or no negative.
TripletResult triplet_loss_batch_hard(const LossBatch& batch,
                                      const TripletParams& params = {});

// Pair-wise circle loss over all unordered pairs (i < j) using cosine
// similarity of the raw embeddings:
//   L = log(1 + sum_n exp(g*a_n*(s_n - m)) * sum_p exp(-g*a_p*(s_p - 1 + m)))
// with a_p = [1 + m - s_p]_+, a_n = [s_n + m]_+. Evaluated in the log domain.
// Returns 0 when the batch has no positive pair or no negative pair.
double circle_loss(const LossBatch& batch, const CircleParams& params = {});

// A term with zero weight is not evaluated, so its batch requirements do not
// apply.
double combined_loss(const LossBatch& batch, const CombinedParams& params = {});

// Row-major n x d matrix of dL/dx for combined_loss. Hinge kinks and
// batch-hard ties take the subgradient of the lowest-index extremum, and a
// zero-length pair distance contributes nothing.
struct Gradient {
  std::size_t rows = 0;
  std::size_t dims = 0;
  std::vector<double> data;

  double at(std::size_t i, std::size_t k) const { return data[i * dims + k]; }
};

Gradient loss_gradient(const LossBatch& batch, const CombinedParams& params = {});

// Batch-hard selection for one anchor. pos/neg are -1 when missing.
struct HardPair {
  std::ptrdiff_t pos = -1;
  std::ptrdiff_t neg = -1;
  double d_pos = 0.0;
  double d_neg = 0.0;
};

// Anchor-wise hardest positive/negative over the whole batch.
std::vector<HardPair> batch_hard_pairs(const LossBatch& batch);

}  // namespace reid
