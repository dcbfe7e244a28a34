#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "segagent/geometry.hpp"

namespace segagent {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

/// Row-major RGB8 image.
class Image {
 public:
  Image() = default;
  Image(ImageDims dims, Rgb fill = {});
  Image(ImageDims dims, std::vector<std::uint8_t> pixels);

  const ImageDims& dims() const { return dims_; }
  int width() const { return dims_.width; }
  int height() const { return dims_.height; }
  bool empty() const { return pixels_.empty(); }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);

  bool operator==(const Image&) const = default;

 private:
  ImageDims dims_;
  std::vector<std::uint8_t> pixels_;
};

/// Row-major {0,1} mask.
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(ImageDims dims);
  BinaryMask(ImageDims dims, std::vector<std::uint8_t> bits);

  const ImageDims& dims() const { return dims_; }
  int width() const { return dims_.width; }
  int height() const { return dims_.height; }

  std::span<const std::uint8_t> bits() const { return bits_; }

  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v) { bits_[index(x, y)] = v ? 1 : 0; }
  std::size_t count() const;

  bool operator==(const BinaryMask&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(dims_.width) +
           static_cast<std::size_t>(x);
  }

  ImageDims dims_;
  std::vector<std::uint8_t> bits_;
};

/// Identity copies; HorizontalFlip mirrors columns; Scale(f) resamples to
/// (round(W*f), round(H*f)) with half-pixel-centred bilinear interpolation
/// and edge clamping. Throws ScaleTooSmall if a dimension rounds to 0.
Image apply_augmentation(const Image& img, const Augmentation& aug);

/// Pixels whose centres (x+0.5, y+0.5) fall inside the half-open box.
BinaryMask box_fill_mask(const BBox& box, const ImageDims& dims);

/// Half-open pixel index range [begin, end) of centres inside [lo, hi),
/// clipped to [0, limit).
struct PixelSpan {
  int begin = 0;
  int end = 0;
  bool empty() const { return end <= begin; }
};
PixelSpan covered_pixels(double lo, double hi, int limit);

// Codecs. PNG decoding accepts any colour type and converts to RGB8; JPEG is
// read through libjpeg.
std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_image(std::span<const std::uint8_t> bytes);

/// 0 -> 0, 1 -> 255, single-channel 8-bit PNG.
std::vector<std::uint8_t> mask_encode(const BinaryMask& mask);
/// Requires a single-channel 8-bit PNG; values >= 128 map to 1. Anything
/// else throws BadMaskFormat.
BinaryMask mask_decode(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

Image load_image(const std::filesystem::path& path);
BinaryMask load_mask(const std::filesystem::path& path);

}  // namespace segagent
