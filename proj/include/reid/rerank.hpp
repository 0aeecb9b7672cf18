#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "reid/tensorio.hpp"

namespace reid {

// k-reciprocal re-ranking parameters. lambda weights the original distance
// in the final blend d* = (1 - lambda) * d_jaccard + lambda * d_original.
struct RerankParams {
  std::size_t k1 = 20;
  std::size_t k2 = 6;
  double lambda = 0.1;
};

// Alpha-weighted query expansion.
struct AqeParams {
  std::size_t k = 5;
  double alpha = 3.0;
};

void validate(const RerankParams& p, std::size_t n_total);

// k-reciprocal re-ranking over the concatenated query + gallery set.
//
// Neighbor lists N(p, k) hold the k + 1 nearest samples of p in the
// concatenated set, p itself included, ordered by (distance, index).
//  1. d = Euclidean distances over the whole set.
//  2. R(p, k1) = {x in N(p, k1) : p in N(x, k1)}.
//  3. R*(p) = R(p, k1) united with every R(c, ceil(k1/2)), c in R(p, k1),
//     that shares at least 2/3 of its members with R(p, k1).
//  4. V_p[x] = exp(-d(p, x)) on R*(p), zero elsewhere, L1-normalized.
//  5. When k2 > 1, V_p becomes the mean of V over the first k2 entries of
//     p's neighbor ranking.
//  6. d_J(p, x) = 1 - sum min(V_p, V_x) / sum max(V_p, V_x).
//  7. Output (1 - lambda) d_J + lambda d on the query x gallery block.
DistanceMatrix k_reciprocal_rerank(const FeatureMatrix& q, const FeatureMatrix& g,
                                   const RerankParams& params = {});

// Same procedure starting from a square (n_query + n_gallery) distance
// matrix whose first n_query rows/columns are the queries.
DistanceMatrix k_reciprocal_rerank(const DistanceMatrix& all_distances,
                                   std::size_t n_query,
                                   const RerankParams& params = {});

// Each L2-normalized query is replaced by the weighted mean of itself
// (weight 1) and its top-k gallery neighbors by cosine similarity, weight
// max(sim, 0)^alpha, then re-normalized. Throws ConfigError if k exceeds
// the gallery size.
FeatureMatrix aqe_expand(const FeatureMatrix& q, const FeatureMatrix& g,
                         const AqeParams& params = {});

// Expansion with caller-supplied neighbor lists (e.g. from a re-ranked
// distance matrix); neighbors[i] are gallery indices for query i.
FeatureMatrix aqe_expand_with_neighbors(
    const FeatureMatrix& q, const FeatureMatrix& g,
    const std::vector<std::vector<std::size_t>>& neighbors, double alpha);

// Elementwise sum. With normalize, every input is first min-max scaled to
// [0, 1] over its own entries; a constant matrix scales to zeros.
DistanceMatrix ensemble_distances(std::span<const DistanceMatrix> matrices,
                                  bool normalize = false);

}  // namespace reid
