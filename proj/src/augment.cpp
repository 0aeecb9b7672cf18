#include "reid/augment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "reid/errors.hpp"

namespace reid {

namespace {

constexpr int kMaxAttempts = 100;

void validate_region(double prob, double al, double ah, double rl, double rh) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw ConfigError("probability must lie in [0, 1]");
  if (!(al > 0.0 && al <= ah && ah < 1.0)) {
    throw ConfigError("area fractions need 0 < area_low <= area_high < 1");
  }
  if (!(rl > 0.0 && rl <= rh) || !std::isfinite(rh)) {
    throw ConfigError("aspect ratios need 0 < aspect_low <= aspect_high");
  }
}

}  // namespace

ImageBuffer::ImageBuffer(std::size_t height, std::size_t width,
                         std::vector<std::uint8_t> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (pixels_.size() != height_ * width_ * 3) {
    throw ShapeError("image buffer length does not match H*W*3");
  }
}

void validate(const EraseParams& p) {
  validate_region(p.probability, p.area_low, p.area_high, p.aspect_low, p.aspect_high);
}

void validate(const LgtParams& p) {
  validate_region(p.probability, p.area_low, p.area_high, p.aspect_low, p.aspect_high);
}

ImageBuffer horizontal_flip(const ImageBuffer& img) {
  ImageBuffer out = img;
  const std::size_t w = img.width();
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::copy_n(img.pixel(y, x), 3, out.pixel(y, w - 1 - x));
    }
  }
  return out;
}

std::optional<Rect> sample_region(std::size_t height, std::size_t width,
                                  double area_low, double area_high,
                                  double aspect_low, double aspect_high, Rng& rng) {
  const double area = static_cast<double>(height) * static_cast<double>(width);
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const double target = rng.uniform(area_low, area_high) * area;
    const double aspect = rng.uniform(aspect_low, aspect_high);
    const double h = std::round(std::sqrt(target * aspect));
    const double w = std::round(std::sqrt(target / aspect));
    if (h < 1.0 || w < 1.0) continue;
    if (w < static_cast<double>(width) && h < static_cast<double>(height)) {
      const auto rh = static_cast<std::size_t>(h);
      const auto rw = static_cast<std::size_t>(w);
      Rect r;
      r.height = rh;
      r.width = rw;
      r.y = rng.uniform_int(0, height - rh);
      r.x = rng.uniform_int(0, width - rw);
      return r;
    }
  }
  return std::nullopt;
}

AugmentResult random_erase(const ImageBuffer& img, const EraseParams& p, Rng& rng) {
  validate(p);
  AugmentResult res{img, std::nullopt};
  if (!(rng.uniform01() < p.probability)) return res;
  const auto region = sample_region(img.height(), img.width(), p.area_low, p.area_high,
                                    p.aspect_low, p.aspect_high, rng);
  if (!region) return res;

  std::uint8_t mean[3] = {0, 0, 0};
  if (p.fill == EraseFill::ChannelMean) {
    const std::uint64_t n = img.height() * img.width();
    std::uint64_t sum[3] = {0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < 3; ++c) sum[c] += img.pixels()[i * 3 + c];
    }
    for (int c = 0; c < 3; ++c) mean[c] = static_cast<std::uint8_t>((sum[c] + n / 2) / n);
  }
  for (std::size_t y = region->y; y < region->y + region->height; ++y) {
    for (std::size_t x = region->x; x < region->x + region->width; ++x) {
      std::uint8_t* px = res.image.pixel(y, x);
      for (int c = 0; c < 3; ++c) {
        px[c] = p.fill == EraseFill::ChannelMean
                    ? mean[c]
                    : static_cast<std::uint8_t>(rng.next_u64() >> 56);
      }
    }
  }
  res.region = region;
  return res;
}

std::uint8_t luma_bt601(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

ImageBuffer grayscale_region(const ImageBuffer& img, const Rect& r) {
  ImageBuffer out = img;
  const std::size_t y1 = std::min(r.y + r.height, img.height());
  const std::size_t x1 = std::min(r.x + r.width, img.width());
  for (std::size_t y = r.y; y < y1; ++y) {
    for (std::size_t x = r.x; x < x1; ++x) {
      std::uint8_t* px = out.pixel(y, x);
      const std::uint8_t v = luma_bt601(px[0], px[1], px[2]);
      px[0] = px[1] = px[2] = v;
    }
  }
  return out;
}

AugmentResult local_grayscale(const ImageBuffer& img, const LgtParams& p, Rng& rng) {
  validate(p);
  AugmentResult res{img, std::nullopt};
  if (!(rng.uniform01() < p.probability)) return res;
  const auto region = sample_region(img.height(), img.width(), p.area_low, p.area_high,
                                    p.aspect_low, p.aspect_high, rng);
  if (!region) return res;
  res.image = grayscale_region(img, *region);
  res.region = region;
  return res;
}

ImageBuffer decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&]() -> std::size_t {
    skip_ws();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw FormatError("malformed PPM header");
    }
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > (1u << 24)) throw FormatError("PPM dimension too large");
    }
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw FormatError("not a binary PPM (P6) file");
  }
  pos = 2;
  const std::size_t w = read_uint();
  const std::size_t h = read_uint();
  const std::size_t maxval = read_uint();
  if (maxval != 255) throw FormatError("only 8-bit PPM (maxval 255) is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw FormatError("malformed PPM header");
  }
  ++pos;
  const std::size_t n = w * h * 3;
  if (bytes.size() - pos != n) throw FormatError("PPM payload size mismatch");
  return ImageBuffer(h, w, std::vector<std::uint8_t>(bytes.begin() + pos, bytes.end()));
}

std::vector<std::uint8_t> encode_ppm(const ImageBuffer& img) {
  const std::string header = "P6\n" + std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

ImageBuffer read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_ppm(bytes);
  } catch (Error& e) {
    e.add_context(path.string());
    throw;
  }
}

void write_ppm(const ImageBuffer& img, const std::filesystem::path& path) {
  const auto bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace reid
