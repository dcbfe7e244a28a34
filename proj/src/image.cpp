#include "segagent/image.hpp"

#include <algorithm>
#include <cmath>

#include "segagent/error.hpp"

namespace segagent {

namespace {

std::size_t pixel_count(const ImageDims& dims) {
  return static_cast<std::size_t>(dims.width) * static_cast<std::size_t>(dims.height);
}

}  // namespace

Image::Image(ImageDims dims, Rgb fill) : dims_(dims) {
  validate(dims);
  pixels_.resize(pixel_count(dims) * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
  }
}

Image::Image(ImageDims dims, std::vector<std::uint8_t> pixels)
    : dims_(dims), pixels_(std::move(pixels)) {
  validate(dims);
  if (pixels_.size() != pixel_count(dims) * 3) {
    throw Error(ErrorCode::BadImage, "pixel buffer length does not match dims");
  }
}

Rgb Image::at(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * dims_.width + x) * 3;
  return Rgb{pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void Image::set(int x, int y, Rgb c) {
  const std::size_t i = (static_cast<std::size_t>(y) * dims_.width + x) * 3;
  pixels_[i] = c.r;
  pixels_[i + 1] = c.g;
  pixels_[i + 2] = c.b;
}

BinaryMask::BinaryMask(ImageDims dims) : dims_(dims) {
  validate(dims);
  bits_.assign(pixel_count(dims), 0);
}

BinaryMask::BinaryMask(ImageDims dims, std::vector<std::uint8_t> bits)
    : dims_(dims), bits_(std::move(bits)) {
  validate(dims);
  if (bits_.size() != pixel_count(dims)) {
    throw Error(ErrorCode::BadMaskFormat, "bit buffer length does not match dims");
  }
  for (auto& b : bits_) {
    if (b > 1) throw Error(ErrorCode::BadMaskFormat, "mask values must be 0 or 1");
  }
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

namespace {

Image flip_horizontal(const Image& img) {
  Image out(img.dims());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.set(img.width() - 1 - x, y, img.at(x, y));
  }
  return out;
}

Image resample_bilinear(const Image& img, double factor) {
  const ImageDims dims = augmented_dims(Augmentation::scale(factor), img.dims());
  if (dims.width < 1 || dims.height < 1) {
    throw Error(ErrorCode::ScaleTooSmall, "scaled image would be " + std::to_string(dims.width) +
                                              "x" + std::to_string(dims.height));
  }
  const int sw = img.width();
  const int sh = img.height();
  const auto src = img.pixels();

  // Source sample position per output column/row, precomputed.
  struct Tap {
    int i0, i1;
    double w;
  };
  auto taps = [factor](int out_n, int src_n) {
    std::vector<Tap> t(static_cast<std::size_t>(out_n));
    for (int o = 0; o < out_n; ++o) {
      double s = (o + 0.5) / factor - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(src_n - 1));
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, src_n - 1);
      t[static_cast<std::size_t>(o)] = Tap{i0, i1, s - i0};
    }
    return t;
  };
  const auto tx = taps(dims.width, sw);
  const auto ty = taps(dims.height, sh);

  std::vector<std::uint8_t> out(static_cast<std::size_t>(dims.width) * dims.height * 3);
  for (int y = 0; y < dims.height; ++y) {
    const Tap& ry = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < dims.width; ++x) {
      const Tap& rx = tx[static_cast<std::size_t>(x)];
      for (int c = 0; c < 3; ++c) {
        auto px = [&](int xx, int yy) {
          return static_cast<double>(src[(static_cast<std::size_t>(yy) * sw + xx) * 3 + c]);
        };
        const double top = px(rx.i0, ry.i0) * (1.0 - rx.w) + px(rx.i1, ry.i0) * rx.w;
        const double bot = px(rx.i0, ry.i1) * (1.0 - rx.w) + px(rx.i1, ry.i1) * rx.w;
        const double v = top * (1.0 - ry.w) + bot * ry.w;
        out[(static_cast<std::size_t>(y) * dims.width + x) * 3 + c] =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return Image(dims, std::move(out));
}

}  // namespace

Image apply_augmentation(const Image& img, const Augmentation& aug) {
  switch (aug.kind()) {
    case AugmentationKind::Identity: return img;
    case AugmentationKind::HorizontalFlip: return flip_horizontal(img);
    case AugmentationKind::Scale: return resample_bilinear(img, aug.factor());
  }
  return img;
}

PixelSpan covered_pixels(double lo, double hi, int limit) {
  const double b = std::clamp(std::ceil(lo - 0.5), 0.0, static_cast<double>(limit));
  const double e = std::clamp(std::ceil(hi - 0.5), 0.0, static_cast<double>(limit));
  return PixelSpan{static_cast<int>(b), static_cast<int>(e)};
}

BinaryMask box_fill_mask(const BBox& box, const ImageDims& dims) {
  BinaryMask mask(dims);
  const PixelSpan xs = covered_pixels(box.x1, box.x2, dims.width);
  const PixelSpan ys = covered_pixels(box.y1, box.y2, dims.height);
  for (int y = ys.begin; y < ys.end; ++y) {
    for (int x = xs.begin; x < xs.end; ++x) mask.set(x, y, true);
  }
  return mask;
}

}  // namespace segagent
