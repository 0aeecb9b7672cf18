#include "reid/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "reid/errors.hpp"

namespace reid {

RankingResult rank_gallery(const DistanceMatrix& d) {
  RankingResult r;
  r.n_gallery = d.n_gallery();
  r.order.resize(d.n_query());
  for (std::size_t i = 0; i < d.n_query(); ++i) {
    auto& ord = r.order[i];
    ord.resize(d.n_gallery());
    std::iota(ord.begin(), ord.end(), 0u);
    const auto row = d.row(i);
    std::stable_sort(ord.begin(), ord.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return row[a] < row[b]; });
  }
  return r;
}

EvalReport evaluate(const RankingResult& r, const MetaTable& qmeta,
                    const MetaTable& gmeta, const EvalOptions& opts) {
  if (r.order.size() != qmeta.size()) {
    throw ShapeError("ranking has " + std::to_string(r.order.size()) +
                     " queries but query metadata has " + std::to_string(qmeta.size()));
  }
  if (r.n_gallery != gmeta.size()) {
    throw ShapeError("ranking covers " + std::to_string(r.n_gallery) +
                     " gallery items but gallery metadata has " +
                     std::to_string(gmeta.size()));
  }
  const std::size_t topk = std::max<std::size_t>(1, std::min(opts.topk, r.n_gallery));
  EvalReport rep;
  std::vector<std::size_t> hits(topk, 0);
  double ap_sum = 0.0;

  for (std::size_t qi = 0; qi < r.order.size(); ++qi) {
    const auto& q = qmeta[qi];
    std::size_t rank = 0;  // position in the filtered list
    std::size_t matches = 0;
    std::size_t first_match = 0;
    double precision_sum = 0.0;
    for (const std::uint32_t gi : r.order[qi]) {
      const auto& g = gmeta[gi];
      const bool same_id = g.person_id == q.person_id;
      if (opts.exclude_same_camera && same_id && g.camera_id == q.camera_id) continue;
      ++rank;
      if (same_id) {
        ++matches;
        if (matches == 1) first_match = rank;
        precision_sum += static_cast<double>(matches) / static_cast<double>(rank);
      }
    }
    if (matches == 0) {
      ++rep.n_skipped_queries;
      continue;
    }
    ++rep.n_valid_queries;
    ap_sum += precision_sum / static_cast<double>(matches);
    if (first_match <= topk) ++hits[first_match - 1];
  }
  if (rep.n_valid_queries == 0) {
    throw EvalError("no query has a matching gallery item");
  }
  const auto nv = static_cast<double>(rep.n_valid_queries);
  rep.mAP = ap_sum / nv;
  rep.cmc.resize(topk);
  std::size_t cum = 0;
  for (std::size_t k = 0; k < topk; ++k) {
    cum += hits[k];
    rep.cmc[k] = static_cast<double>(cum) / nv;
  }
  return rep;
}

EvalReport evaluate_distances(const DistanceMatrix& d, const MetaTable& qmeta,
                              const MetaTable& gmeta, const EvalOptions& opts) {
  return evaluate(rank_gallery(d), qmeta, gmeta, opts);
}

std::string ablation_table(const std::vector<NamedReport>& reports) {
  std::size_t width = 6;  // "Method"
  for (const auto& nr : reports) {
    width = std::max(width, nr.name.empty() ? std::size_t{9} : nr.name.size());
  }
  std::string out;
  auto line = [&](const std::string& name, const std::string& value) {
    out += name;
    out.append(width - name.size(), ' ');
    out += " | " + value + "\n";
  };
  line("Method", "mAP(%)");
  out += std::string(width, '-') + "-|-" + std::string(7, '-') + "\n";
  char buf[32];
  for (const auto& nr : reports) {
    std::snprintf(buf, sizeof(buf), "%.4f", nr.report.mAP * 100.0);
    line(nr.name.empty() ? "(unnamed)" : nr.name, buf);
  }
  return out;
}

std::string report_to_text(const EvalReport& r) {
  char buf[64];
  std::string out;
  auto kv = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s=%.10g\n", key, v);
    out += buf;
  };
  kv("mAP", r.mAP);
  out += "n_valid_queries=" + std::to_string(r.n_valid_queries) + "\n";
  out += "n_skipped_queries=" + std::to_string(r.n_skipped_queries) + "\n";
  for (std::size_t k : {1, 5, 10}) {
    if (k <= r.cmc.size()) kv(("rank" + std::to_string(k)).c_str(), r.cmc[k - 1]);
  }
  return out;
}

std::string cmc_to_csv(const EvalReport& r) {
  std::string out = "rank,cmc\n";
  char buf[64];
  for (std::size_t k = 0; k < r.cmc.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%zu,%.10g\n", k + 1, r.cmc[k]);
    out += buf;
  }
  return out;
}

}  // namespace reid
