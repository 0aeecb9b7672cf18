#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "reid/tensorio.hpp"

namespace reid {

// Per query, gallery indices in ascending distance order (ties by index).
struct RankingResult {
  std::size_t n_gallery = 0;
  std::vector<std::vector<std::uint32_t>> order;
};

struct EvalReport {
  double mAP = 0.0;
  std::vector<double> cmc;  // cmc[k - 1] = fraction matched within top-k
  std::size_t n_valid_queries = 0;
  std::size_t n_skipped_queries = 0;
};

struct EvalOptions {
  bool exclude_same_camera = false;
  std::size_t topk = 50;
};

RankingResult rank_gallery(const DistanceMatrix& d);

// Standard ReID protocol. With exclude_same_camera, gallery items sharing
// both person_id and camera_id with the query are dropped from its list.
// AP is the mean precision at each true match; queries without any match are
// skipped. Throws EvalError if every query is skipped. topk is clamped to
// the gallery size.
EvalReport evaluate(const RankingResult& r, const MetaTable& qmeta,
                    const MetaTable& gmeta, const EvalOptions& opts = {});

// rank_gallery + evaluate.
EvalReport evaluate_distances(const DistanceMatrix& d, const MetaTable& qmeta,
                              const MetaTable& gmeta, const EvalOptions& opts = {});

struct NamedReport {
  std::string name;
  EvalReport report;
};

// Two-column "Method | mAP(%)" text table, 4 decimals.
std::string ablation_table(const std::vector<NamedReport>& reports);

// Flat key=value text (mAP, counts, rank-1/5/10).
std::string report_to_text(const EvalReport& r);
// CSV `rank,cmc`.
std::string cmc_to_csv(const EvalReport& r);

}  // namespace reid
