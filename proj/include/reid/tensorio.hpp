#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace reid {

// n x d row-major float embeddings. Every element is finite.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  // Throws ShapeError if data.size() != rows * dims or a dimension is zero,
  // DataError on NaN/Inf.
  FeatureMatrix(std::size_t rows, std::size_t dims, std::vector<float> data);

  std::size_t rows() const { return rows_; }
  std::size_t dims() const { return dims_; }
  bool empty() const { return rows_ == 0; }

  std::span<const float> data() const { return data_; }
  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dims_, dims_};
  }
  float at(std::size_t i, std::size_t j) const { return data_[i * dims_ + j]; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dims_ = 0;
  std::vector<float> data_;
};

// q x g row-major pairwise distances. Every element is finite and >= 0.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t n_query, std::size_t n_gallery,
                 std::vector<float> data);

  std::size_t n_query() const { return n_query_; }
  std::size_t n_gallery() const { return n_gallery_; }

  std::span<const float> data() const { return data_; }
  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * n_gallery_, n_gallery_};
  }
  float at(std::size_t i, std::size_t j) const {
    return data_[i * n_gallery_ + j];
  }

  friend bool operator==(const DistanceMatrix&,
                         const DistanceMatrix&) = default;

 private:
  std::size_t n_query_ = 0;
  std::size_t n_gallery_ = 0;
  std::vector<float> data_;
};

struct SampleMeta {
  std::string image_id;
  std::uint32_t person_id = 0;
  std::uint32_t camera_id = 0;

  friend bool operator==(const SampleMeta&, const SampleMeta&) = default;
};

// Ordered metadata, index-aligned with a FeatureMatrix. image_id values are
// non-empty and unique.
class MetaTable {
 public:
  MetaTable() = default;
  explicit MetaTable(std::vector<SampleMeta> entries);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const SampleMeta& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<SampleMeta>& entries() const { return entries_; }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  friend bool operator==(const MetaTable&, const MetaTable&) = default;

 private:
  std::vector<SampleMeta> entries_;
};

// .fvec: "RDF1" | u32 n | u32 d | n*d float32, all little-endian.
FeatureMatrix load_features(const std::filesystem::path& path);
void save_features(const FeatureMatrix& m, const std::filesystem::path& path);

// .dmat: "RDM1" | u32 n_query | u32 n_gallery | payload float32 LE.
DistanceMatrix load_distances(const std::filesystem::path& path);
void save_distances(const DistanceMatrix& m,
                    const std::filesystem::path& path);

// CSV with header exactly `image_id,person_id,camera_id`.
MetaTable load_meta(const std::filesystem::path& path);
void save_meta(const MetaTable& meta, const std::filesystem::path& path);

// In-memory variants of the binary codecs, used by the file functions.
std::vector<std::uint8_t> encode_features(const FeatureMatrix& m);
FeatureMatrix decode_features(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_distances(const DistanceMatrix& m);
DistanceMatrix decode_distances(std::span<const std::uint8_t> bytes);
MetaTable parse_meta(const std::string& text);

// Throws ShapeError unless meta.size() == m.rows().
void check_aligned(const FeatureMatrix& m, const MetaTable& meta);

}  // namespace reid
