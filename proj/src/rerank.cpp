#include "reid/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "reid/errors.hpp"
#include "reid/geometry.hpp"

namespace reid {

namespace {

using SparseRow = std::vector<std::pair<std::uint32_t, double>>;

// First k + 1 entries of every row's (distance, index) ordering.
std::vector<std::vector<std::uint32_t>> top_neighbors(const DistanceMatrix& d,
                                                      std::size_t k) {
  const std::size_t n = d.n_query();
  const std::size_t keep = std::min(k + 1, d.n_gallery());
  std::vector<std::vector<std::uint32_t>> out(n);
  std::vector<std::uint32_t> idx(d.n_gallery());
  for (std::size_t p = 0; p < n; ++p) {
    const auto row = d.row(p);
    std::iota(idx.begin(), idx.end(), 0u);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        return row[a] < row[b] || (row[a] == row[b] && a < b);
                      });
    out[p].assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  return out;
}

// R(p, k): members of N(p, k) whose own N(., k) contains p.
std::vector<std::uint32_t> reciprocal_set(
    const std::vector<std::vector<std::uint32_t>>& ranks, std::uint32_t p,
    std::size_t k) {
  std::vector<std::uint32_t> out;
  const auto& fwd = ranks[p];
  for (std::size_t a = 0; a <= k && a < fwd.size(); ++a) {
    const auto& back = ranks[fwd[a]];
    const std::size_t lim = std::min(k + 1, back.size());
    if (std::find(back.begin(), back.begin() + static_cast<std::ptrdiff_t>(lim), p) !=
        back.begin() + static_cast<std::ptrdiff_t>(lim)) {
      out.push_back(fwd[a]);
    }
  }
  return out;
}

}  // namespace

void validate(const RerankParams& p, std::size_t n_total) {
  if (p.k1 < 1) throw ConfigError("k1 must be >= 1");
  if (p.k2 < 1 || p.k2 > p.k1) throw ConfigError("k2 must satisfy 1 <= k2 <= k1");
  if (p.k1 >= n_total) {
    throw ConfigError("k1 must be smaller than n_query + n_gallery (" +
                      std::to_string(n_total) + ")");
  }
  if (!(p.lambda >= 0.0 && p.lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
}

DistanceMatrix k_reciprocal_rerank(const FeatureMatrix& q, const FeatureMatrix& g,
                                   const RerankParams& params) {
  if (q.dims() != g.dims()) throw ShapeError("query and gallery dims differ");
  validate(params, q.rows() + g.rows());
  const FeatureMatrix all = concat_rows(q, g);
  return k_reciprocal_rerank(euclidean_distances(all, all), q.rows(), params);
}

DistanceMatrix k_reciprocal_rerank(const DistanceMatrix& dist, std::size_t n_query,
                                   const RerankParams& params) {
  const std::size_t n = dist.n_query();
  if (dist.n_gallery() != n) throw ShapeError("re-ranking needs a square distance matrix");
  if (n_query > n) throw ShapeError("n_query exceeds the matrix size");
  validate(params, n);
  const std::size_t ng = n - n_query;

  const auto ranks = top_neighbors(dist, params.k1);
  const std::size_t half = (params.k1 + 1) / 2;

  // Steps 2-4: sparse neighborhood encodings.
  std::vector<SparseRow> v(n);
  std::vector<char> mark(n, 0);
  for (std::uint32_t p = 0; p < n; ++p) {
    const auto base = reciprocal_set(ranks, p, params.k1);
    std::vector<std::uint32_t> expanded = base;
    for (const std::uint32_t c : base) mark[c] = 1;
    for (const std::uint32_t c : base) {
      const auto cand = reciprocal_set(ranks, c, half);
      std::size_t shared = 0;
      for (const std::uint32_t x : cand) shared += mark[x];
      if (3 * shared >= 2 * cand.size()) {
        expanded.insert(expanded.end(), cand.begin(), cand.end());
      }
    }
    for (const std::uint32_t c : base) mark[c] = 0;
    std::sort(expanded.begin(), expanded.end());
    expanded.erase(std::unique(expanded.begin(), expanded.end()), expanded.end());

    SparseRow& row = v[p];
    row.reserve(expanded.size());
    double total = 0.0;
    for (const std::uint32_t x : expanded) {
      const double w = std::exp(-static_cast<double>(dist.at(p, x)));
      row.emplace_back(x, w);
      total += w;
    }
    if (!(total > 0.0)) {
      // Every weight underflowed or p lost its own slot to duplicates.
      row.assign(1, {p, 1.0});
      continue;
    }
    for (auto& e : row) e.second /= total;
  }

  // Step 5: local query expansion.
  if (params.k2 > 1) {
    std::vector<SparseRow> qe(n);
    std::vector<double> acc(n, 0.0);
    std::vector<char> seen(n, 0);
    std::vector<std::uint32_t> touched;
    for (std::uint32_t p = 0; p < n; ++p) {
      touched.clear();
      for (std::size_t a = 0; a < params.k2; ++a) {
        for (const auto& [x, w] : v[ranks[p][a]]) {
          if (!seen[x]) {
            seen[x] = 1;
            touched.push_back(x);
          }
          acc[x] += w;
        }
      }
      std::sort(touched.begin(), touched.end());
      SparseRow& row = qe[p];
      row.reserve(touched.size());
      for (const std::uint32_t x : touched) {
        row.emplace_back(x, acc[x] / static_cast<double>(params.k2));
        acc[x] = 0.0;
        seen[x] = 0;
      }
    }
    v = std::move(qe);
  }

  // Step 6: Jaccard distance through an inverted index over gallery rows.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> inverted(n);
  std::vector<double> row_sum(n, 0.0);
  for (std::uint32_t r = 0; r < n; ++r) {
    for (const auto& [x, w] : v[r]) {
      row_sum[r] += w;
      if (r >= n_query) inverted[x].emplace_back(r - static_cast<std::uint32_t>(n_query), w);
    }
  }

  const double lambda = params.lambda;
  std::vector<float> out(n_query * ng);
  std::vector<double> shared(ng);
  for (std::size_t p = 0; p < n_query; ++p) {
    std::fill(shared.begin(), shared.end(), 0.0);
    for (const auto& [x, w] : v[p]) {
      for (const auto& [gi, wg] : inverted[x]) shared[gi] += std::min(w, wg);
    }
    for (std::size_t j = 0; j < ng; ++j) {
      const double union_mass = row_sum[p] + row_sum[n_query + j] - shared[j];
      double dj = union_mass > 0.0 ? 1.0 - shared[j] / union_mass : 1.0;
      dj = std::clamp(dj, 0.0, 1.0);
      const double d0 = dist.at(p, n_query + j);
      out[p * ng + j] = static_cast<float>((1.0 - lambda) * dj + lambda * d0);
    }
  }
  return DistanceMatrix(n_query, ng, std::move(out));
}

FeatureMatrix aqe_expand_with_neighbors(
    const FeatureMatrix& q, const FeatureMatrix& g,
    const std::vector<std::vector<std::size_t>>& neighbors, double alpha) {
  if (q.dims() != g.dims()) throw ShapeError("query and gallery dims differ");
  if (neighbors.size() != q.rows()) throw ShapeError("one neighbor list per query required");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("AQE alpha must be finite and >= 0");
  }
  const FeatureMatrix qn = l2_normalize(q);
  const FeatureMatrix gn = l2_normalize(g);
  const std::size_t d = q.dims();
  std::vector<float> out(q.rows() * d);
  std::vector<double> acc(d);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    const auto qi = qn.row(i);
    for (std::size_t k = 0; k < d; ++k) acc[k] = qi[k];
    double total = 1.0;
    for (const std::size_t j : neighbors[i]) {
      if (j >= g.rows()) throw ShapeError("AQE neighbor index out of range");
      const auto gj = gn.row(j);
      double sim = 0.0;
      for (std::size_t k = 0; k < d; ++k) sim += static_cast<double>(qi[k]) * gj[k];
      const double w = std::pow(std::max(sim, 0.0), alpha);
      for (std::size_t k = 0; k < d; ++k) acc[k] += w * gj[k];
      total += w;
    }
    for (std::size_t k = 0; k < d; ++k) out[i * d + k] = static_cast<float>(acc[k] / total);
  }
  return l2_normalize(FeatureMatrix(q.rows(), d, std::move(out)));
}

FeatureMatrix aqe_expand(const FeatureMatrix& q, const FeatureMatrix& g,
                         const AqeParams& params) {
  if (q.dims() != g.dims()) throw ShapeError("query and gallery dims differ");
  if (params.k > g.rows()) {
    throw ConfigError("AQE k=" + std::to_string(params.k) + " exceeds gallery size " +
                      std::to_string(g.rows()));
  }
  std::vector<std::vector<std::size_t>> neighbors(q.rows());
  if (params.k > 0) {
    // Smallest cosine distance first == largest similarity first.
    const DistanceMatrix cd = cosine_distances(l2_normalize(q), l2_normalize(g));
    std::vector<std::size_t> idx(g.rows());
    for (std::size_t i = 0; i < q.rows(); ++i) {
      const auto row = cd.row(i);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(params.k),
                        idx.end(), [&](std::size_t a, std::size_t b) {
                          return row[a] < row[b] || (row[a] == row[b] && a < b);
                        });
      neighbors[i].assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(params.k));
    }
  }
  return aqe_expand_with_neighbors(q, g, neighbors, params.alpha);
}

DistanceMatrix ensemble_distances(std::span<const DistanceMatrix> matrices,
                                  bool normalize) {
  if (matrices.empty()) throw ConfigError("ensemble needs at least one matrix");
  const std::size_t nq = matrices[0].n_query();
  const std::size_t ng = matrices[0].n_gallery();
  for (const auto& m : matrices) {
    if (m.n_query() != nq || m.n_gallery() != ng) {
      throw ShapeError("ensemble inputs must share one shape");
    }
  }
  std::vector<double> acc(nq * ng, 0.0);
  for (const auto& m : matrices) {
    const auto data = m.data();
    if (!normalize) {
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += data[i];
      continue;
    }
    if (data.empty()) continue;
    const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
    const double lo = *lo_it;
    const double range = static_cast<double>(*hi_it) - lo;
    if (range == 0.0) continue;
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += (data[i] - lo) / range;
  }
  std::vector<float> out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
  return DistanceMatrix(nq, ng, std::move(out));
}

}  // namespace reid
