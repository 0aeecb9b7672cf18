#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "reid/tensorio.hpp"

namespace testutil {

inline reid::FeatureMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed,
                                         double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<float> v(n * d);
  for (auto& x : v) x = static_cast<float>(dist(gen));
  return reid::FeatureMatrix(n, d, std::move(v));
}

inline std::vector<std::vector<double>> to_rows(const reid::FeatureMatrix& m) {
  std::vector<std::vector<double>> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i].assign(m.row(i).begin(), m.row(i).end());
  return out;
}

inline reid::MetaTable meta_from_labels(const std::vector<std::uint32_t>& ids,
                                        const std::vector<std::uint32_t>& cams = {},
                                        const std::string& prefix = "img") {
  std::vector<reid::SampleMeta> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out.push_back({prefix + std::to_string(i), ids[i], cams.empty() ? 0u : cams[i]});
  }
  return reid::MetaTable(std::move(out));
}

// Per-test scratch directory under the system temp dir.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("reid_test_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
