#pragma once

// Reference implementations used only by the tests. They are written
// straight from the definitions, share no code with src/, and favor
// clarity over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  return ab / std::sqrt(aa * bb);
}

// Average precision straight from the definition: mean over relevant ranks
// k of (#relevant among the first k) / k, recounting the prefix each time.
inline double average_precision(const std::vector<bool>& relevant) {
  double sum = 0.0;
  int n_rel = 0;
  for (std::size_t k = 0; k < relevant.size(); ++k) {
    if (!relevant[k]) continue;
    ++n_rel;
    int hits = 0;
    for (std::size_t t = 0; t <= k; ++t) hits += relevant[t] ? 1 : 0;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return n_rel == 0 ? -1.0 : sum / n_rel;
}

// Batch-hard triplet loss per anchor via exhaustive (a, p, n) enumeration:
// the hinge of the worst triplet.
inline std::vector<double> triplet_by_enumeration(const Rows& x,
                                                  const std::vector<std::uint32_t>& y,
                                                  double margin) {
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t a = 0; a < x.size(); ++a) {
    double worst = 0.0;
    for (std::size_t p = 0; p < x.size(); ++p) {
      if (p == a || y[p] != y[a]) continue;
      for (std::size_t n = 0; n < x.size(); ++n) {
        if (y[n] == y[a]) continue;
        worst = std::max(worst, euclid(x[a], x[p]) - euclid(x[a], x[n]) + margin);
      }
    }
    out[a] = worst;
  }
  return out;
}

// Circle loss evaluated term by term without any log-domain tricks.
inline double circle_scalar(const Rows& x, const std::vector<std::uint32_t>& y,
                            double m, double gamma) {
  double sum_p = 0.0, sum_n = 0.0;
  int np = 0, nn = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double s = cosine(x[i], x[j]);
      if (y[i] == y[j]) {
        const double ap = std::max(1.0 + m - s, 0.0);
        sum_p += std::exp(-gamma * ap * (s - (1.0 - m)));
        ++np;
      } else {
        const double an = std::max(s + m, 0.0);
        sum_n += std::exp(gamma * an * (s - m));
        ++nn;
      }
    }
  }
  if (np == 0 || nn == 0) return 0.0;
  return std::log(1.0 + sum_n * sum_p);
}

// Central finite differences of f at x (flattened), step h.
inline std::vector<double> finite_difference(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Fourth-order central stencil with the same step h:
// (-f(x+2h) + 8 f(x+h) - 8 f(x-h) + f(x-2h)) / 12h.
inline std::vector<double> finite_difference_4th(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    auto at = [&](double t) {
      x[i] = orig + t;
      return f(x);
    };
    g[i] = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12.0 * h);
    x[i] = orig;
  }
  return g;
}

// Linear-interpolation quantile on a sorted copy.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const double lo = std::floor(h);
  const double hi = std::ceil(h);
  return v[static_cast<std::size_t>(lo)] +
         (h - lo) * (v[static_cast<std::size_t>(hi)] - v[static_cast<std::size_t>(lo)]);
}

// Straight-line k-reciprocal re-ranking with dense matrices and std::set.
// Distances are float-rounded like the library's output so neighbor
// orderings coincide.
inline std::vector<std::vector<double>> rerank_naive(const Rows& query, const Rows& gallery,
                                                     int k1, int k2, double lambda) {
  Rows all = query;
  all.insert(all.end(), gallery.begin(), gallery.end());
  const int n = static_cast<int>(all.size());
  const int nq = static_cast<int>(query.size());

  std::vector<std::vector<double>> dist(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) dist[i][j] = static_cast<float>(euclid(all[i], all[j]));
  }

  // Full ranking per row, ties by index.
  std::vector<std::vector<int>> rank(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) rank[i].push_back(j);
    std::stable_sort(rank[i].begin(), rank[i].end(),
                     [&](int a, int b) { return dist[i][a] < dist[i][b]; });
  }
  auto nn = [&](int p, int k) {
    std::vector<int> v(rank[p].begin(), rank[p].begin() + k + 1);
    return v;
  };
  auto in = [](const std::vector<int>& v, int x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  auto recip = [&](int p, int k) {
    std::set<int> r;
    for (int x : nn(p, k)) {
      if (in(nn(x, k), p)) r.insert(x);
    }
    return r;
  };

  const int half = static_cast<int>(std::ceil(k1 / 2.0));
  std::vector<std::vector<double>> V(n, std::vector<double>(n, 0.0));
  for (int p = 0; p < n; ++p) {
    const std::set<int> base = recip(p, k1);
    std::set<int> star = base;
    for (int c : base) {
      const std::set<int> rc = recip(c, half);
      int shared = 0;
      for (int x : rc) shared += base.count(x) ? 1 : 0;
      if (static_cast<double>(shared) >= (2.0 / 3.0) * static_cast<double>(rc.size())) {
        star.insert(rc.begin(), rc.end());
      }
    }
    double z = 0.0;
    for (int x : star) z += std::exp(-dist[p][x]);
    for (int x : star) V[p][x] = std::exp(-dist[p][x]) / z;
  }

  if (k2 > 1) {
    std::vector<std::vector<double>> W(n, std::vector<double>(n, 0.0));
    for (int p = 0; p < n; ++p) {
      for (int a = 0; a < k2; ++a) {
        for (int j = 0; j < n; ++j) W[p][j] += V[rank[p][a]][j];
      }
      for (int j = 0; j < n; ++j) W[p][j] /= k2;
    }
    V = W;
  }

  std::vector<std::vector<double>> out(nq, std::vector<double>(n - nq));
  for (int p = 0; p < nq; ++p) {
    for (int g = nq; g < n; ++g) {
      double mn = 0.0, mx = 0.0;
      for (int j = 0; j < n; ++j) {
        mn += std::min(V[p][j], V[g][j]);
        mx += std::max(V[p][j], V[g][j]);
      }
      const double dj = 1.0 - mn / mx;
      out[p][g - nq] = (1.0 - lambda) * dj + lambda * dist[p][g];
    }
  }
  return out;
}

// True when no batch-hard selection, hinge or circle alpha_n clamp is
// within tau of switching. Finite differences are only meaningful there.
inline bool is_non_tie_point(const Rows& x, const std::vector<std::uint32_t>& y,
                             double margin, double circle_m, double tau) {
  for (std::size_t a = 0; a < x.size(); ++a) {
    std::vector<double> dp, dn;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j == a) continue;
      (y[j] == y[a] ? dp : dn).push_back(euclid(x[a], x[j]));
    }
    std::sort(dp.rbegin(), dp.rend());
    std::sort(dn.begin(), dn.end());
    if (dp.size() > 1 && dp[0] - dp[1] < tau) return false;
    if (dn.size() > 1 && dn[1] - dn[0] < tau) return false;
    if (!dp.empty() && !dn.empty() && std::abs(dp[0] - dn[0] + margin) < tau) return false;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      if (y[i] != y[j] && std::abs(cosine(x[i], x[j]) + circle_m) < tau) return false;
    }
  }
  return true;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

}  // namespace oracle
