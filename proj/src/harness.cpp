#include "reid/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>

#include "reid/errors.hpp"
#include "reid/geometry.hpp"
#include "reid/rng.hpp"

namespace reid {

void validate(const WarmupSchedule& s) {
  if (!(s.base_lr > 0.0 && s.base_lr <= s.peak_lr)) {
    throw ConfigError("schedule needs 0 < base_lr <= peak_lr");
  }
  if (!(s.warmup_epochs >= 0.0 && s.warmup_epochs <= s.total_epochs)) {
    throw ConfigError("schedule needs 0 <= warmup_epochs <= total_epochs");
  }
}

double lr_at(double epoch, const WarmupSchedule& s) {
  validate(s);
  if (!(epoch >= 0.0 && epoch <= s.total_epochs)) {
    throw ConfigError("epoch outside [0, total_epochs]");
  }
  if (epoch < s.warmup_epochs) {
    return std::lerp(s.base_lr, s.peak_lr, epoch / s.warmup_epochs);
  }
  if (s.decay == Decay::None || s.total_epochs == s.warmup_epochs) return s.peak_lr;
  const double t = (epoch - s.warmup_epochs) / (s.total_epochs - s.warmup_epochs);
  return std::lerp(s.base_lr, s.peak_lr, 0.5 * (1.0 + std::cos(std::numbers::pi * t)));
}

void validate(const SynthParams& p) {
  if (p.n_ids < 2) throw ConfigError("synthetic data needs n_ids >= 2");
  if (p.per_id < 2) throw ConfigError("synthetic data needs per_id >= 2");
  if (p.dims < 1) throw ConfigError("synthetic data needs dims >= 1");
  if (!(p.cluster_spread >= 0.0) || !std::isfinite(p.cluster_spread)) {
    throw ConfigError("cluster_spread must be finite and >= 0");
  }
  if (!(p.noise_frac >= 0.0 && p.noise_frac <= 1.0)) {
    throw ConfigError("noise_frac must lie in [0, 1]");
  }
  if (p.n_cameras < 1) throw ConfigError("n_cameras must be >= 1");
}

SyntheticSet generate_synthetic(const SynthParams& p) {
  validate(p);
  Rng rng(p.seed);
  const std::size_t n = p.n_ids * p.per_id;

  std::vector<double> centers(p.n_ids * p.dims);
  for (std::size_t i = 0; i < p.n_ids; ++i) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (std::size_t k = 0; k < p.dims; ++k) {
        const double v = rng.normal();
        centers[i * p.dims + k] = v;
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < p.dims; ++k) centers[i * p.dims + k] /= norm;
  }

  std::vector<float> data(n * p.dims);
  std::vector<SampleMeta> meta(n);
  for (std::size_t i = 0; i < p.n_ids; ++i) {
    for (std::size_t j = 0; j < p.per_id; ++j) {
      const std::size_t s = i * p.per_id + j;
      for (std::size_t k = 0; k < p.dims; ++k) {
        data[s * p.dims + k] =
            static_cast<float>(centers[i * p.dims + k] + p.cluster_spread * rng.normal());
      }
      char id[48];
      std::snprintf(id, sizeof(id), "p%04zu_s%03zu", i, j);
      meta[s] = {id, static_cast<std::uint32_t>(i),
                 static_cast<std::uint32_t>(j % p.n_cameras)};
    }
  }

  // Partial Fisher-Yates picks the relabeled samples.
  const auto n_noise = static_cast<std::size_t>(std::llround(p.noise_frac * static_cast<double>(n)));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t t = 0; t < n_noise; ++t) {
    const auto r = static_cast<std::size_t>(rng.uniform_int(t, n - 1));
    std::swap(perm[t], perm[r]);
    auto& m = meta[perm[t]];
    auto other = static_cast<std::uint32_t>(rng.uniform_int(0, p.n_ids - 2));
    if (other >= m.person_id) ++other;
    m.person_id = other;
  }

  SyntheticSet out{FeatureMatrix(n, p.dims, std::move(data)), MetaTable(std::move(meta)),
                   n_noise};
  return out;
}

QueryGallerySplit split_query_gallery(const FeatureMatrix& features,
                                      const MetaTable& meta,
                                      std::size_t queries_per_id) {
  check_aligned(features, meta);
  std::map<std::uint32_t, std::size_t> taken;
  std::vector<float> qd, gd;
  std::vector<SampleMeta> qm, gm;
  for (std::size_t i = 0; i < meta.size(); ++i) {
    const auto row = features.row(i);
    if (taken[meta[i].person_id]++ < queries_per_id) {
      qd.insert(qd.end(), row.begin(), row.end());
      qm.push_back(meta[i]);
    } else {
      gd.insert(gd.end(), row.begin(), row.end());
      gm.push_back(meta[i]);
    }
  }
  if (qm.empty() || gm.empty()) throw ConfigError("split leaves an empty query or gallery set");
  const std::size_t d = features.dims();
  return {FeatureMatrix(qm.size(), d, std::move(qd)), MetaTable(std::move(qm)),
          FeatureMatrix(gm.size(), d, std::move(gd)), MetaTable(std::move(gm))};
}

FeatureMatrix perturb_features(const FeatureMatrix& features, double sigma,
                               std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be >= 0");
  Rng rng(seed);
  std::vector<float> out(features.data().begin(), features.data().end());
  for (float& v : out) v = static_cast<float>(v + sigma * rng.normal());
  return FeatureMatrix(features.rows(), features.dims(), std::move(out));
}

namespace {

template <class F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (Error& e) {
    e.add_context(std::string("stage '") + name + "'");
    throw;
  }
}

std::vector<std::vector<std::size_t>> top_k_from(const DistanceMatrix& d, std::size_t k) {
  const RankingResult r = rank_gallery(d);
  std::vector<std::vector<std::size_t>> out(r.order.size());
  for (std::size_t i = 0; i < r.order.size(); ++i) {
    out[i].assign(r.order[i].begin(), r.order[i].begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  out << s;
  if (!out) throw IoError("write failed for " + p.string());
}

}  // namespace

PipelineResult run_pipeline(const PipelineInputs& in, const PipelineConfig& cfg) {
  stage("load", [&] {
    check_aligned(in.query, in.query_meta);
    check_aligned(in.gallery, in.gallery_meta);
    if (in.query.dims() != in.gallery.dims()) throw ShapeError("query and gallery dims differ");
    return 0;
  });

  PipelineResult res;
  auto eval = [&](const DistanceMatrix& d) {
    return stage("evaluate", [&] {
      return evaluate_distances(d, in.query_meta, in.gallery_meta, cfg.eval);
    });
  };

  FeatureMatrix q = in.query;
  FeatureMatrix g = in.gallery;
  DistanceMatrix d = stage("distances", [&] {
    return euclidean_distances(l2_normalize(q), l2_normalize(g));
  });
  res.stages.push_back({"Baseline", eval(d)});

  if (cfg.tta) {
    stage("tta", [&] {
      if (!in.query_flip || !in.gallery_flip) {
        throw ConfigError("tta needs flipped query and gallery features");
      }
      q = fuse_flip_features(q, *in.query_flip);
      g = fuse_flip_features(g, *in.gallery_flip);
      return 0;
    });
  }
  q = l2_normalize(q);
  g = l2_normalize(g);

  const bool aqe_before = cfg.aqe && cfg.aqe_order == AqeOrder::BeforeDistance;
  const bool aqe_after = cfg.aqe && cfg.aqe_order == AqeOrder::AfterRerank;
  if (aqe_before) q = stage("aqe", [&] { return aqe_expand(q, g, cfg.aqe_params); });

  d = stage("distances", [&] { return euclidean_distances(q, g); });
  if (cfg.tta) res.stages.push_back({"+ Augmentation Test", eval(d)});
  if (aqe_before) res.stages.push_back({"+ AQE", eval(d)});

  if (cfg.rerank) {
    d = stage("rerank", [&] { return k_reciprocal_rerank(q, g, cfg.rerank_params); });
    res.stages.push_back({"+ Re-rank", eval(d)});
  }

  if (aqe_after) {
    d = stage("aqe", [&] {
      if (cfg.aqe_params.k > g.rows()) {
        throw ConfigError("AQE k exceeds gallery size");
      }
      if (!cfg.rerank) return euclidean_distances(aqe_expand(q, g, cfg.aqe_params), g);
      // Expand with the re-ranked neighbors, then re-rank the expanded queries.
      const auto nbrs = top_k_from(d, cfg.aqe_params.k);
      const FeatureMatrix qx = aqe_expand_with_neighbors(q, g, nbrs, cfg.aqe_params.alpha);
      return k_reciprocal_rerank(qx, g, cfg.rerank_params);
    });
    res.stages.push_back({"+ AQE", eval(d)});
  }

  if (cfg.ensemble) {
    d = stage("ensemble", [&] {
      if (in.ensemble_inputs.empty()) {
        throw ConfigError("ensemble enabled but no distance matrices were supplied");
      }
      std::vector<DistanceMatrix> all;
      all.reserve(in.ensemble_inputs.size() + 1);
      all.push_back(d);
      all.insert(all.end(), in.ensemble_inputs.begin(), in.ensemble_inputs.end());
      return ensemble_distances(all, cfg.normalize_ensemble);
    });
    res.stages.push_back({"+ Ensemble", eval(d)});
  }

  res.report = res.stages.back().report;
  res.distances = std::move(d);
  return res;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  PipelineInputs in = stage("load", [&] {
    PipelineInputs x;
    x.query = load_features(cfg.query_features);
    x.gallery = load_features(cfg.gallery_features);
    x.query_meta = load_meta(cfg.query_meta);
    x.gallery_meta = load_meta(cfg.gallery_meta);
    if (cfg.tta) {
      if (cfg.query_flip_features.empty() || cfg.gallery_flip_features.empty()) {
        throw ConfigError("tta needs query_flip and gallery_flip feature files");
      }
      x.query_flip = load_features(cfg.query_flip_features);
      x.gallery_flip = load_features(cfg.gallery_flip_features);
    }
    if (cfg.ensemble) {
      for (const auto& p : cfg.ensemble_inputs) x.ensemble_inputs.push_back(load_distances(p));
    }
    return x;
  });

  PipelineResult res = run_pipeline(in, cfg);

  stage("write", [&] {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create " + cfg.out_dir.string() + ": " + ec.message());
    save_distances(res.distances, cfg.out_dir / "final.dmat");
    write_text(cfg.out_dir / "report.txt", report_to_text(res.report));
    write_text(cfg.out_dir / "cmc.csv", cmc_to_csv(res.report));
    write_text(cfg.out_dir / "ablation.txt", ablation_table(res.stages));
    return 0;
  });
  return res;
}

}  // namespace reid
