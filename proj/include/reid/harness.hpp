#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reid/eval.hpp"
#include "reid/rerank.hpp"
#include "reid/tensorio.hpp"

namespace reid {

// ---------------------------------------------------------------------------
// Learning-rate warmup

enum class Decay { None, Cosine };

struct WarmupSchedule {
  double base_lr = 1e-4;
  double peak_lr = 5e-3;
  double warmup_epochs = 10;
  double total_epochs = 180;
  Decay decay = Decay::Cosine;
};

void validate(const WarmupSchedule& s);

// Linear base -> peak over [0, warmup_epochs]; afterwards constant peak
// (Decay::None) or a half cosine from peak back to base at total_epochs.
// Endpoints are exact. Throws ConfigError outside [0, total_epochs].
double lr_at(double epoch, const WarmupSchedule& s = {});

// ---------------------------------------------------------------------------
// Synthetic identities

struct SynthParams {
  std::size_t n_ids = 50;
  std::size_t per_id = 20;
  std::size_t dims = 32;
  double cluster_spread = 0.1;
  double noise_frac = 0.0;
  std::uint64_t seed = 42;
  std::size_t n_cameras = 1;  // camera_id = sample index within id % n_cameras
};

void validate(const SynthParams& p);

struct SyntheticSet {
  FeatureMatrix features;
  MetaTable meta;
  std::size_t n_relabeled = 0;
};

// Unit-norm Gaussian center per identity; samples are center + N(0, spread^2)
// per dimension. Exactly round(noise_frac * n) samples are moved to a
// different identity. Deterministic per seed.
SyntheticSet generate_synthetic(const SynthParams& p);

struct QueryGallerySplit {
  FeatureMatrix query;
  MetaTable query_meta;
  FeatureMatrix gallery;
  MetaTable gallery_meta;
};

// The first `queries_per_id` samples (table order) of every person_id become
// queries; everything else is gallery.
QueryGallerySplit split_query_gallery(const FeatureMatrix& features,
                                      const MetaTable& meta,
                                      std::size_t queries_per_id = 1);

// features + N(0, sigma^2) noise, seeded.
FeatureMatrix perturb_features(const FeatureMatrix& features, double sigma,
                               std::uint64_t seed);

// ---------------------------------------------------------------------------
// Pipeline

enum class AqeOrder { BeforeDistance, AfterRerank };

struct PipelineConfig {
  std::filesystem::path query_features;
  std::filesystem::path gallery_features;
  std::filesystem::path query_meta;
  std::filesystem::path gallery_meta;
  std::filesystem::path query_flip_features;    // used when tta
  std::filesystem::path gallery_flip_features;  // used when tta
  std::vector<std::filesystem::path> ensemble_inputs;
  std::filesystem::path out_dir = "pipeline_out";

  bool tta = false;
  bool aqe = false;
  bool rerank = false;
  bool ensemble = false;
  bool normalize_ensemble = false;
  AqeOrder aqe_order = AqeOrder::AfterRerank;

  RerankParams rerank_params;
  AqeParams aqe_params;
  EvalOptions eval;
  std::uint64_t seed = 42;
};

struct PipelineInputs {
  FeatureMatrix query;
  FeatureMatrix gallery;
  MetaTable query_meta;
  MetaTable gallery_meta;
  std::optional<FeatureMatrix> query_flip;
  std::optional<FeatureMatrix> gallery_flip;
  std::vector<DistanceMatrix> ensemble_inputs;
};

struct PipelineResult {
  DistanceMatrix distances;
  EvalReport report;
  std::vector<NamedReport> stages;  // baseline first, one row per enabled stage
};

// load -> TTA -> L2 normalize -> AQE (before) -> distances -> re-rank ->
// AQE (after) -> ensemble -> evaluate. Errors carry the failing stage name.
PipelineResult run_pipeline(const PipelineInputs& in, const PipelineConfig& cfg);

// Loads inputs from cfg paths, runs, and writes final.dmat, report.txt,
// cmc.csv and ablation.txt into cfg.out_dir.
PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace reid
