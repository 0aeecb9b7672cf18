#include "reid/mining.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "reid/errors.hpp"

namespace reid {

const char* to_string(SampleClass c) {
  switch (c) {
    case SampleClass::Clean: return "Clean";
    case SampleClass::Hard: return "Hard";
    case SampleClass::Noise: return "Noise";
  }
  return "?";
}

SampleLosses per_sample_losses(const FeatureMatrix& features,
                               const MetaTable& meta,
                               const TripletParams& params) {
  validate(params);
  check_aligned(features, meta);
  SampleLosses out;
  out.losses.assign(features.rows(), 0.0);
  out.degenerate.assign(features.rows(), false);
  if (features.rows() < 2) {
    out.degenerate.assign(features.rows(), true);
    out.n_degenerate = features.rows();
    return out;
  }
  std::vector<std::uint32_t> labels;
  labels.reserve(meta.size());
  for (const auto& e : meta) labels.push_back(e.person_id);
  const LossBatch batch(features, std::move(labels));
  const auto pairs = batch_hard_pairs(batch);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].pos < 0 || pairs[i].neg < 0) {
      out.degenerate[i] = true;
      ++out.n_degenerate;
      continue;
    }
    out.losses[i] = std::max(pairs[i].d_pos - pairs[i].d_neg + params.margin, 0.0);
  }
  return out;
}

MiningReport partition_samples(const std::vector<double>& losses,
                               const MiningThresholds& th) {
  if (!(th.t_hard < th.t_noise)) {
    throw ConfigError("mining thresholds need t_hard < t_noise");
  }
  MiningReport r;
  r.losses = losses;
  r.partition.reserve(losses.size());
  for (double l : losses) {
    if (l >= th.t_noise) {
      r.partition.push_back(SampleClass::Noise);
      ++r.n_noise;
    } else if (l >= th.t_hard) {
      r.partition.push_back(SampleClass::Hard);
      ++r.n_hard;
    } else {
      r.partition.push_back(SampleClass::Clean);
      ++r.n_clean;
    }
  }
  return r;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ConfigError("quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile fraction outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

MiningThresholds thresholds_from_quantiles(const std::vector<double>& losses,
                                           double q_hard, double q_noise) {
  if (!(q_hard > 0.0 && q_hard < q_noise && q_noise < 1.0)) {
    throw ConfigError("quantile fractions need 0 < q_hard < q_noise < 1");
  }
  return {empirical_quantile(losses, q_hard), empirical_quantile(losses, q_noise)};
}

std::size_t ResamplePlan::total_copies() const {
  std::size_t t = 0;
  for (const auto& e : copies) t += e.copies;
  return t;
}

ResamplePlan balanced_resample_plan(const MetaTable& meta, std::size_t target,
                                    std::size_t max_copies) {
  if (meta.empty()) throw ConfigError("resample plan needs a non-empty table");
  std::map<std::uint32_t, std::vector<std::size_t>> by_id;
  for (std::size_t i = 0; i < meta.size(); ++i) by_id[meta[i].person_id].push_back(i);

  std::vector<std::size_t> count(meta.size(), 0);
  for (const auto& [id, members] : by_id) {
    const std::size_t k = members.size();
    if (k >= target) continue;
    const std::size_t goal = std::min(target, k * (1 + max_copies));
    for (std::size_t extra = 0; extra < goal - k; ++extra) {
      ++count[members[extra % k]];
    }
  }
  ResamplePlan plan;
  for (std::size_t i = 0; i < count.size(); ++i) {
    if (count[i] > 0) plan.copies.push_back({i, count[i]});
  }
  return plan;
}

std::string mining_report_csv(const MiningReport& report, const MetaTable& meta) {
  if (report.losses.size() != meta.size()) {
    throw ShapeError("mining report and metadata differ in length");
  }
  std::string out = "image_id,loss,class\n";
  char buf[64];
  for (std::size_t i = 0; i < meta.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.9g", report.losses[i]);
    out += meta[i].image_id + "," + buf + "," + to_string(report.partition[i]) + "\n";
  }
  return out;
}

}  // namespace reid
