#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "reid/errors.hpp"
#include "reid/mining.hpp"
#include "test_util.hpp"

using namespace reid;

TEST_CASE("per-sample losses") {
  SUBCASE("tight far-apart clusters give zero loss") {
    const FeatureMatrix f(4, 2, {0, 0, 0.01f, 0, 10, 10, 10, 10.01f});
    const auto r = per_sample_losses(f, testutil::meta_from_labels({0, 0, 1, 1}));
    for (double l : r.losses) CHECK(l == 0.0);
    CHECK(r.n_degenerate == 0);
  }
  SUBCASE("an occluded-looking sample exceeds the margin") {
    // Identity 0 at x=0 and x=4, identity 1 at x=1 and x=1.2, identity 2 far.
    // Sample 0: farthest positive 4, nearest negative 1 -> 4 - 1 + 0.4 = 3.4.
    const FeatureMatrix f(5, 1, {0, 4, 1, 1.2f, 50});
    const auto r = per_sample_losses(f, testutil::meta_from_labels({0, 0, 1, 1, 2}), {0.4});
    CHECK(r.losses[0] == doctest::Approx(3.4).epsilon(1e-9));
    CHECK(r.losses[0] > 0.4);
    // Sample 1: positive at 4, nearest negative 1.2 at distance 2.8 -> 1.6.
    CHECK(r.losses[1] == doctest::Approx(4.0 - (4.0 - 1.2f) + 0.4).epsilon(1e-7));
    // Singleton identity 2 is flagged and gets zero.
    CHECK(r.degenerate[4]);
    CHECK(r.losses[4] == 0.0);
    CHECK(r.n_degenerate == 1);
  }
  SUBCASE("permutation equivariance") {
    const FeatureMatrix f = testutil::random_matrix(12, 5, 3);
    const std::vector<std::uint32_t> ids = {0, 1, 2, 0, 1, 2, 0, 1, 2, 3, 3, 3};
    const auto base = per_sample_losses(f, testutil::meta_from_labels(ids));
    std::vector<std::size_t> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937 gen(5);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<float> pf;
    std::vector<std::uint32_t> pid;
    for (std::size_t i : perm) {
      pf.insert(pf.end(), f.row(i).begin(), f.row(i).end());
      pid.push_back(ids[i]);
    }
    const auto permuted = per_sample_losses(FeatureMatrix(12, 5, pf), testutil::meta_from_labels(pid));
    for (std::size_t k = 0; k < 12; ++k) CHECK(permuted.losses[k] == base.losses[perm[k]]);
  }
}

TEST_CASE("partition_samples") {
  const MiningReport r = partition_samples({0.1, 0.5, 2.0}, {0.4, 1.5});
  CHECK(r.partition == std::vector{SampleClass::Clean, SampleClass::Hard, SampleClass::Noise});
  CHECK(r.n_clean == 1);
  CHECK(r.n_hard == 1);
  CHECK(r.n_noise == 1);

  const MiningReport zeros = partition_samples({0, 0, 0, 0}, {0.4, 1.5});
  CHECK(zeros.n_clean == 4);

  const MiningReport edge = partition_samples({1.5, 0.4}, {0.4, 1.5});
  CHECK(edge.partition[0] == SampleClass::Noise);
  CHECK(edge.partition[1] == SampleClass::Hard);

  CHECK_THROWS_AS(partition_samples({1.0}, {1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(partition_samples({1.0}, {2.0, 1.0}), ConfigError);
}

TEST_CASE("lowering t_noise never shrinks the noise set") {
  std::mt19937_64 gen(11);
  std::exponential_distribution<double> e(1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> losses(100);
    for (auto& l : losses) l = e(gen);
    std::size_t prev_noise = 0;
    for (double t_noise = 6.0; t_noise > 0.2; t_noise -= 0.25) {
      const MiningReport r = partition_samples(losses, {0.1, t_noise});
      CHECK(r.n_clean + r.n_hard + r.n_noise == losses.size());
      CHECK(r.n_noise >= prev_noise);
      prev_noise = r.n_noise;
    }
  }
}

TEST_CASE("quantile thresholds") {
  std::vector<double> ramp(100);
  std::iota(ramp.begin(), ramp.end(), 0.0);
  const MiningThresholds th = thresholds_from_quantiles(ramp, 0.5, 0.95);
  CHECK(th.t_noise == doctest::Approx(oracle::quantile(ramp, 0.95)).epsilon(1e-12));
  CHECK(th.t_noise == doctest::Approx(94.05).epsilon(1e-12));
  CHECK(th.t_hard == doctest::Approx(49.5).epsilon(1e-12));

  const std::vector<double> sym = {-3, -1, 0, 1, 3};
  CHECK(thresholds_from_quantiles(sym, 0.5, 0.9).t_hard == 0.0);

  const std::vector<double> flat(10, 2.0);
  const MiningThresholds ft = thresholds_from_quantiles(flat, 0.7, 0.97);
  CHECK(ft.t_hard == ft.t_noise);
  CHECK_THROWS_AS(partition_samples(flat, ft), ConfigError);

  CHECK_THROWS_AS(thresholds_from_quantiles(ramp, 0.9, 0.5), ConfigError);
  CHECK_THROWS_AS(thresholds_from_quantiles(ramp, 0.0, 0.5), ConfigError);
  CHECK_THROWS_AS(thresholds_from_quantiles(ramp, 0.5, 1.0), ConfigError);
}

TEST_CASE("balanced resample plan") {
  std::vector<std::uint32_t> ids;
  for (int i = 0; i < 20; ++i) ids.push_back(0);  // already at target
  for (int i = 0; i < 4; ++i) ids.push_back(1);
  for (int i = 0; i < 2; ++i) ids.push_back(2);
  for (int i = 0; i < 25; ++i) ids.push_back(3);
  const MetaTable meta = testutil::meta_from_labels(ids);
  const ResamplePlan plan = balanced_resample_plan(meta, 20, 5);

  std::map<std::uint32_t, std::size_t> per_id;
  for (const auto& e : plan.copies) {
    CHECK(e.copies >= 1);
    CHECK(e.copies <= 5);
    per_id[meta[e.index].person_id] += e.copies;
  }
  CHECK(per_id.count(0) == 0);
  CHECK(per_id.count(3) == 0);
  CHECK(per_id[1] == 16);  // 4 images, 4 copies each
  CHECK(per_id[2] == 10);  // cap binds: 2 * 5
  for (const auto& e : plan.copies) {
    if (meta[e.index].person_id == 1) CHECK(e.copies == 4);
    if (meta[e.index].person_id == 2) CHECK(e.copies == 5);
  }
  CHECK(plan.total_copies() == 26);
  CHECK_THROWS_AS(balanced_resample_plan(MetaTable{}), ConfigError);
}

TEST_CASE("mining report CSV") {
  const MetaTable meta = testutil::meta_from_labels({0, 1});
  const MiningReport r = partition_samples({0.25, 3.0}, {1.0, 2.0});
  CHECK(mining_report_csv(r, meta) == "image_id,loss,class\nimg0,0.25,Clean\nimg1,3,Noise\n");
}
