#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reid/rng.hpp"

namespace reid {

// H x W interleaved 8-bit RGB, row-major.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(std::size_t height, std::size_t width, std::vector<std::uint8_t> pixels);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  const std::uint8_t* pixel(std::size_t y, std::size_t x) const {
    return pixels_.data() + (y * width_ + x) * 3;
  }
  std::uint8_t* pixel(std::size_t y, std::size_t x) {
    return pixels_.data() + (y * width_ + x) * 3;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct Rect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  bool contains(std::size_t px, std::size_t py) const {
    return px >= x && px < x + width && py >= y && py < y + height;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

enum class EraseFill { RandomPerPixel, ChannelMean };

// Defaults are the canonical Random Erasing settings.
struct EraseParams {
  double probability = 0.5;
  double area_low = 0.02;
  double area_high = 0.4;
  double aspect_low = 0.3;
  double aspect_high = 3.33;
  EraseFill fill = EraseFill::RandomPerPixel;
};

struct LgtParams {
  double probability = 0.4;
  double area_low = 0.02;
  double area_high = 0.4;
  double aspect_low = 0.3;
  double aspect_high = 3.33;
};

struct AugmentResult {
  ImageBuffer image;
  std::optional<Rect> region;
};

void validate(const EraseParams& p);
void validate(const LgtParams& p);

ImageBuffer horizontal_flip(const ImageBuffer& img);

// Samples a rectangle with area fraction in [area_low, area_high) and
// aspect ratio (height / width) in [aspect_low, aspect_high); up to 100
// attempts, nullopt when none fits strictly inside the image.
std::optional<Rect> sample_region(std::size_t height, std::size_t width,
                                  double area_low, double area_high,
                                  double aspect_low, double aspect_high, Rng& rng);

// With probability p.probability, overwrite a sampled rectangle. The gate
// draw is consumed even when probability is 0 or 1.
AugmentResult random_erase(const ImageBuffer& img, const EraseParams& p, Rng& rng);

// With probability p.probability, replace a sampled rectangle by its BT.601
// luma, round-half-up: g = (299 R + 587 G + 114 B + 500) / 1000.
AugmentResult local_grayscale(const ImageBuffer& img, const LgtParams& p, Rng& rng);

// Grayscale conversion of a fixed rectangle (clipped to the image).
ImageBuffer grayscale_region(const ImageBuffer& img, const Rect& r);

std::uint8_t luma_bt601(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Binary PPM (P6, maxval 255).
ImageBuffer read_ppm(const std::filesystem::path& path);
void write_ppm(const ImageBuffer& img, const std::filesystem::path& path);
ImageBuffer decode_ppm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const ImageBuffer& img);

}  // namespace reid
