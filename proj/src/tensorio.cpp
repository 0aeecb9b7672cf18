#include "reid/tensorio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

#include "reid/errors.hpp"

namespace reid {

namespace {

constexpr std::size_t kHeaderBytes = 12;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<std::uint8_t> encode(const char* magic, std::size_t a,
                                 std::size_t b, std::span<const float> data) {
  if (a > UINT32_MAX || b > UINT32_MAX) {
    throw DataError("matrix dimensions exceed the u32 header range");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 4 * data.size());
  out.insert(out.end(), magic, magic + 4);
  put_u32(out, static_cast<std::uint32_t>(a));
  put_u32(out, static_cast<std::uint32_t>(b));
  for (float f : data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

struct Decoded {
  std::size_t a = 0;
  std::size_t b = 0;
  std::vector<float> data;
};

Decoded decode(const char* magic, std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw FormatError("file shorter than the 12-byte header");
  }
  if (std::memcmp(bytes.data(), magic, 4) != 0) {
    throw FormatError(std::string("bad magic, expected \"") + magic + "\"");
  }
  Decoded d;
  d.a = get_u32(bytes.data() + 4);
  d.b = get_u32(bytes.data() + 8);
  const std::uint64_t count = static_cast<std::uint64_t>(d.a) * d.b;
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (payload != count * 4) {
    std::ostringstream os;
    os << "payload is " << payload << " bytes but header declares " << d.a
       << "x" << d.b << " floats";
    throw FormatError(os.str());
  }
  d.data.resize(count);
  const std::uint8_t* p = bytes.data() + kHeaderBytes;
  for (std::size_t i = 0; i < count; ++i, p += 4) {
    d.data[i] = std::bit_cast<float>(get_u32(p));
  }
  return d;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void check_finite(std::span<const float> data, const char* what) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw DataError(std::string(what) + " contains a non-finite value at flat index " +
                      std::to_string(i));
    }
  }
}

template <class Int>
bool parse_int(std::string_view s, Int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t dims,
                             std::vector<float> data)
    : rows_(rows), dims_(dims), data_(std::move(data)) {
  if (rows_ == 0 || dims_ == 0) {
    throw ShapeError("feature matrix needs rows >= 1 and dims >= 1");
  }
  if (data_.size() != rows_ * dims_) {
    throw ShapeError("feature data length " + std::to_string(data_.size()) +
                     " != " + std::to_string(rows_) + "x" +
                     std::to_string(dims_));
  }
  check_finite(data_, "feature matrix");
}

DistanceMatrix::DistanceMatrix(std::size_t n_query, std::size_t n_gallery,
                               std::vector<float> data)
    : n_query_(n_query), n_gallery_(n_gallery), data_(std::move(data)) {
  if (data_.size() != n_query_ * n_gallery_) {
    throw ShapeError("distance data length " + std::to_string(data_.size()) +
                     " != " + std::to_string(n_query_) + "x" +
                     std::to_string(n_gallery_));
  }
  check_finite(data_, "distance matrix");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] < 0.0f) {
      throw DataError("distance matrix has a negative entry at flat index " +
                      std::to_string(i));
    }
  }
}

MetaTable::MetaTable(std::vector<SampleMeta> entries)
    : entries_(std::move(entries)) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (e.image_id.empty()) throw DataError("empty image_id");
    if (!seen.insert(e.image_id).second) {
      throw DataError("duplicate image_id '" + e.image_id + "'");
    }
  }
}

std::vector<std::uint8_t> encode_features(const FeatureMatrix& m) {
  return encode("RDF1", m.rows(), m.dims(), m.data());
}

FeatureMatrix decode_features(std::span<const std::uint8_t> bytes) {
  Decoded d = decode("RDF1", bytes);
  if (d.a == 0 || d.b == 0) throw FormatError("feature header has a zero dimension");
  return FeatureMatrix(d.a, d.b, std::move(d.data));
}

std::vector<std::uint8_t> encode_distances(const DistanceMatrix& m) {
  return encode("RDM1", m.n_query(), m.n_gallery(), m.data());
}

DistanceMatrix decode_distances(std::span<const std::uint8_t> bytes) {
  Decoded d = decode("RDM1", bytes);
  return DistanceMatrix(d.a, d.b, std::move(d.data));
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  try {
    return decode_features(read_file(path));
  } catch (Error& e) {
    e.add_context(path.string());
    throw;
  }
}

void save_features(const FeatureMatrix& m, const std::filesystem::path& path) {
  write_file(path, encode_features(m));
}

DistanceMatrix load_distances(const std::filesystem::path& path) {
  try {
    return decode_distances(read_file(path));
  } catch (Error& e) {
    e.add_context(path.string());
    throw;
  }
}

void save_distances(const DistanceMatrix& m,
                    const std::filesystem::path& path) {
  write_file(path, encode_distances(m));
}

MetaTable parse_meta(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("metadata CSV is empty");
  std::string_view header = trim_cr(line);
  // Tolerate a UTF-8 byte-order mark.
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  if (header != "image_id,person_id,camera_id") {
    throw FormatError("metadata header must be image_id,person_id,camera_id");
  }
  std::vector<SampleMeta> entries;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = trim_cr(line);
    if (row.empty()) continue;
    const auto c1 = row.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
    if (c2 == std::string_view::npos || row.find(',', c2 + 1) != std::string_view::npos) {
      throw FormatError("line " + std::to_string(line_no) + ": expected 3 fields");
    }
    SampleMeta m;
    m.image_id = std::string(row.substr(0, c1));
    if (!parse_int(row.substr(c1 + 1, c2 - c1 - 1), m.person_id)) {
      throw FormatError("line " + std::to_string(line_no) +
                        ": person_id is not a non-negative integer");
    }
    if (!parse_int(row.substr(c2 + 1), m.camera_id)) {
      throw FormatError("line " + std::to_string(line_no) +
                        ": camera_id is not a non-negative integer");
    }
    entries.push_back(std::move(m));
  }
  return MetaTable(std::move(entries));
}

MetaTable load_meta(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_meta(std::string(bytes.begin(), bytes.end()));
  } catch (Error& e) {
    e.add_context(path.string());
    throw;
  }
}

void save_meta(const MetaTable& meta, const std::filesystem::path& path) {
  std::string text = "image_id,person_id,camera_id\n";
  for (const auto& e : meta) {
    if (e.image_id.find_first_of(",\r\n") != std::string::npos) {
      throw DataError("image_id '" + e.image_id + "' cannot be written to CSV");
    }
    text += e.image_id + "," + std::to_string(e.person_id) + "," +
            std::to_string(e.camera_id) + "\n";
  }
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                             text.size()));
}

void check_aligned(const FeatureMatrix& m, const MetaTable& meta) {
  if (m.rows() != meta.size()) {
    throw ShapeError("metadata has " + std::to_string(meta.size()) +
                     " rows but features have " + std::to_string(m.rows()));
  }
}

}  // namespace reid
