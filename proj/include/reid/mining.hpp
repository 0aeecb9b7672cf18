#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "reid/losses.hpp"
#include "reid/tensorio.hpp"

namespace reid {

// Loss thresholds separating clean, hard and noise samples.
struct MiningThresholds {
  double t_hard = 0.0;
  double t_noise = 0.0;
};

enum class SampleClass { Clean, Hard, Noise };

const char* to_string(SampleClass c);

struct MiningReport {
  std::vector<double> losses;
  std::vector<SampleClass> partition;
  std::size_t n_clean = 0;
  std::size_t n_hard = 0;
  std::size_t n_noise = 0;
};

struct SampleLosses {
  std::vector<double> losses;
  // True where the sample had no positive or no negative and got loss 0.
  std::vector<bool> degenerate;
  std::size_t n_degenerate = 0;
};

// Batch-hard triplet loss of every sample as anchor against the full set.
SampleLosses per_sample_losses(const FeatureMatrix& features,
                               const MetaTable& meta,
                               const TripletParams& params = {});

// Noise iff loss >= t_noise; Hard iff t_hard <= loss < t_noise.
MiningReport partition_samples(const std::vector<double>& losses,
                               const MiningThresholds& th);

// Linear-interpolation empirical quantiles (the "type 7" estimator).
MiningThresholds thresholds_from_quantiles(const std::vector<double>& losses,
                                           double q_hard = 0.7,
                                           double q_noise = 0.97);

// Linear-interpolation quantile of unsorted data; q in [0, 1].
double empirical_quantile(std::vector<double> values, double q);

struct ResampleEntry {
  std::size_t index = 0;
  std::size_t copies = 0;

  friend bool operator==(const ResampleEntry&, const ResampleEntry&) = default;
};

struct ResamplePlan {
  std::vector<ResampleEntry> copies;  // ascending sample index

  std::size_t total_copies() const;
};

// Identities with fewer than `target` samples get extra copies, dealt
// round-robin over their samples in table order, until the identity reaches
// min(target, k * (1 + max_copies)) samples.
ResamplePlan balanced_resample_plan(const MetaTable& meta,
                                    std::size_t target = 20,
                                    std::size_t max_copies = 5);

// CSV `image_id,loss,class`.
std::string mining_report_csv(const MiningReport& report, const MetaTable& meta);

}  // namespace reid
