#include <cmath>
#include <fstream>
#include <set>

#include "doctest.h"
#include "reid/errors.hpp"
#include "reid/geometry.hpp"
#include "reid/harness.hpp"
#include "test_util.hpp"

using namespace reid;

TEST_CASE("warmup schedule") {
  const WarmupSchedule s;
  CHECK(lr_at(0, s) == 1e-4);
  CHECK(lr_at(10, s) == 5e-3);
  CHECK(lr_at(5, s) == doctest::Approx(0.00255).epsilon(1e-12));
  CHECK(lr_at(180, s) == doctest::Approx(1e-4).epsilon(1e-12));
  for (double e = 0.0; e < 10.0; e += 0.5) CHECK(lr_at(e + 0.5, s) > lr_at(e, s));

  WarmupSchedule flat = s;
  flat.decay = Decay::None;
  CHECK(lr_at(100, flat) == 5e-3);
  for (const auto& sch : {s, flat}) {
    CHECK(std::abs(lr_at(10 + 1e-9, sch) - lr_at(10, sch)) <= 1e-9);
    CHECK(std::abs(lr_at(10 - 1e-9, sch) - lr_at(10, sch)) <= 1e-9);
  }
  CHECK_THROWS_AS(lr_at(-1, s), ConfigError);
  CHECK_THROWS_AS(lr_at(181, s), ConfigError);
  WarmupSchedule bad = s;
  bad.warmup_epochs = 200;
  CHECK_THROWS_AS(lr_at(1, bad), ConfigError);
}

TEST_CASE("synthetic identities") {
  SynthParams p;
  p.n_ids = 10;
  p.per_id = 5;
  p.dims = 8;
  const SyntheticSet a = generate_synthetic(p);
  const SyntheticSet b = generate_synthetic(p);
  CHECK(a.features == b.features);
  CHECK(a.meta == b.meta);
  CHECK(a.features.rows() == 50);
  CHECK(a.meta[7].image_id == "p0001_s002");
  p.seed = 43;
  CHECK_FALSE(generate_synthetic(p).features == a.features);

  SUBCASE("exact relabel count") {
    SynthParams q;
    q.noise_frac = 0.1;  // 1000 samples
    const SyntheticSet clean = generate_synthetic(SynthParams{});
    const SyntheticSet noisy = generate_synthetic(q);
    CHECK(noisy.n_relabeled == 100);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
      changed += clean.meta[i].person_id != noisy.meta[i].person_id ? 1 : 0;
    }
    CHECK(changed == 100);
  }
  SUBCASE("cameras") {
    SynthParams q = p;
    q.n_cameras = 3;
    const SyntheticSet s = generate_synthetic(q);
    std::set<std::uint32_t> cams;
    for (const auto& m : s.meta) cams.insert(m.camera_id);
    CHECK(cams.size() == 3);
  }
  SUBCASE("validation") {
    SynthParams q;
    q.n_ids = 1;
    CHECK_THROWS_AS(generate_synthetic(q), ConfigError);
    q = {};
    q.noise_frac = 1.5;
    CHECK_THROWS_AS(generate_synthetic(q), ConfigError);
  }
}

TEST_CASE("query/gallery split") {
  SynthParams p;
  p.n_ids = 4;
  p.per_id = 3;
  p.dims = 2;
  const SyntheticSet s = generate_synthetic(p);
  const QueryGallerySplit sp = split_query_gallery(s.features, s.meta, 1);
  CHECK(sp.query.rows() == 4);
  CHECK(sp.gallery.rows() == 8);
  CHECK(sp.query_meta[1].image_id == "p0001_s000");
  CHECK_THROWS_AS(split_query_gallery(s.features, s.meta, 3), ConfigError);
}

TEST_CASE("perturb_features") {
  const FeatureMatrix f = testutil::random_matrix(4, 3, 1);
  CHECK(perturb_features(f, 0.0, 5) == f);
  CHECK(perturb_features(f, 0.1, 5) == perturb_features(f, 0.1, 5));
  CHECK_FALSE(perturb_features(f, 0.1, 5) == perturb_features(f, 0.1, 6));
  CHECK_THROWS_AS(perturb_features(f, -1.0, 5), ConfigError);
}

namespace {

PipelineInputs small_inputs() {
  SynthParams p;
  p.n_ids = 10;
  p.per_id = 6;
  p.dims = 8;
  p.cluster_spread = 0.3;
  const SyntheticSet s = generate_synthetic(p);
  const QueryGallerySplit sp = split_query_gallery(s.features, s.meta);
  PipelineInputs in;
  in.query = sp.query;
  in.gallery = sp.gallery;
  in.query_meta = sp.query_meta;
  in.gallery_meta = sp.gallery_meta;
  return in;
}

}  // namespace

TEST_CASE("pipeline") {
  PipelineInputs in = small_inputs();
  SUBCASE("all stages off is the baseline") {
    const PipelineResult r = run_pipeline(in, PipelineConfig{});
    CHECK(r.stages.size() == 1);
    CHECK(r.stages[0].name == "Baseline");
    CHECK(r.distances == euclidean_distances(l2_normalize(in.query), l2_normalize(in.gallery)));
  }
  SUBCASE("flip TTA with identical flips changes nothing") {
    in.query_flip = in.query;
    in.gallery_flip = in.gallery;
    PipelineConfig cfg;
    cfg.tta = true;
    const PipelineResult r = run_pipeline(in, cfg);
    CHECK(r.stages.size() == 2);
    CHECK(r.stages[1].report.mAP == r.stages[0].report.mAP);
  }
  SUBCASE("re-rank with lambda 1 reproduces the baseline") {
    PipelineConfig cfg;
    cfg.rerank = true;
    cfg.rerank_params = {10, 3, 1.0};
    const PipelineResult r = run_pipeline(in, cfg);
    CHECK(r.report.mAP == r.stages[0].report.mAP);
  }
  SUBCASE("stage order") {
    PipelineConfig cfg;
    cfg.aqe = true;
    cfg.rerank = true;
    cfg.rerank_params = {10, 3, 0.3};
    cfg.ensemble = true;
    in.ensemble_inputs.push_back(euclidean_distances(in.query, in.gallery));
    const PipelineResult r = run_pipeline(in, cfg);
    std::vector<std::string> names;
    for (const auto& s : r.stages) names.push_back(s.name);
    CHECK(names == std::vector<std::string>{"Baseline", "+ Re-rank", "+ AQE", "+ Ensemble"});
    cfg.aqe_order = AqeOrder::BeforeDistance;
    const PipelineResult b = run_pipeline(in, cfg);
    CHECK(b.stages[1].name == "+ AQE");
  }
  SUBCASE("errors name the stage") {
    PipelineConfig cfg;
    cfg.tta = true;
    try {
      run_pipeline(in, cfg);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("stage 'tta'") != std::string::npos);
    }
    cfg.tta = false;
    cfg.ensemble = true;
    CHECK_THROWS_AS(run_pipeline(in, cfg), ConfigError);
  }
  SUBCASE("file-based run writes its artifacts") {
    testutil::TempDir dir("pipe");
    save_features(in.query, dir / "q.fvec");
    save_features(in.gallery, dir / "g.fvec");
    save_meta(in.query_meta, dir / "q.csv");
    save_meta(in.gallery_meta, dir / "g.csv");
    PipelineConfig cfg;
    cfg.query_features = dir / "q.fvec";
    cfg.gallery_features = dir / "g.fvec";
    cfg.query_meta = dir / "q.csv";
    cfg.gallery_meta = dir / "g.csv";
    cfg.out_dir = dir / "out";
    cfg.rerank = true;
    cfg.rerank_params = {10, 3, 0.3};
    const PipelineResult r = run_pipeline(cfg);
    CHECK(load_distances(dir / "out" / "final.dmat") == r.distances);
    for (const char* f : {"report.txt", "cmc.csv", "ablation.txt"}) {
      CHECK(std::filesystem::exists(dir / "out" / f));
    }
    cfg.query_features = dir / "missing.fvec";
    CHECK_THROWS_AS(run_pipeline(cfg), IoError);
  }
}
