#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <png.h>

#include <cstring>
#include <random>

#include "fixtures.hpp"
#include "segagent/error.hpp"
#include "segagent/image.hpp"
#include "segagent/som.hpp"

using namespace segagent;
using segagent::testing::ramp_image;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

std::vector<std::uint8_t> png_with_format(std::uint32_t format, int channels, int w, int h) {
  std::vector<std::uint16_t> wide(static_cast<std::size_t>(w * h * channels), 0x8080);
  std::vector<std::uint8_t> narrow(static_cast<std::size_t>(w * h * channels), 200);
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = format;
  const void* data = (format & PNG_FORMAT_FLAG_LINEAR) ? static_cast<const void*>(wide.data())
                                                       : static_cast<const void*>(narrow.data());
  png_alloc_size_t size = 0;
  REQUIRE(png_image_write_to_memory(&image, nullptr, &size, 0, data, 0, nullptr));
  std::vector<std::uint8_t> out(size);
  REQUIRE(png_image_write_to_memory(&image, out.data(), &size, 0, data, 0, nullptr));
  out.resize(size);
  return out;
}

}  // namespace

TEST_CASE("apply_augmentation identity and flip") {
  const Image img = ramp_image({17, 9}, {3, 2, 8, 6});
  CHECK(apply_augmentation(img, Augmentation::identity()) == img);
  const Image flipped = apply_augmentation(img, Augmentation::horizontal_flip());
  CHECK(flipped != img);
  CHECK(flipped.at(0, 4) == img.at(16, 4));
  CHECK(apply_augmentation(flipped, Augmentation::horizontal_flip()) == img);
}

TEST_CASE("apply_augmentation scale dimensions and content") {
  const Image img = ramp_image({10, 8});
  const Image up = apply_augmentation(img, Augmentation::scale(2.0));
  CHECK(up.dims() == ImageDims{20, 16});
  CHECK(apply_augmentation(img, Augmentation::scale(0.75)).dims() == ImageDims{8, 6});

  // A constant image stays constant under bilinear resampling.
  const Image flat(ImageDims{7, 5}, Rgb{12, 34, 56});
  const Image flat_up = apply_augmentation(flat, Augmentation::scale(1.25));
  for (int y = 0; y < flat_up.height(); ++y) {
    for (int x = 0; x < flat_up.width(); ++x) CHECK(flat_up.at(x, y) == Rgb{12, 34, 56});
  }

  // 2x upsampling of a two-pixel row: half-pixel centres give taps at
  // -0.25 (clamped), 0.25, 0.75, 1.25 (clamped).
  Image row(ImageDims{2, 1});
  row.set(0, 0, Rgb{0, 0, 0});
  row.set(1, 0, Rgb{100, 200, 40});
  const Image row_up = apply_augmentation(row, Augmentation::scale(2.0));
  REQUIRE(row_up.dims() == ImageDims{4, 2});
  CHECK(row_up.at(0, 0) == Rgb{0, 0, 0});
  CHECK(row_up.at(1, 0) == Rgb{25, 50, 10});
  CHECK(row_up.at(2, 0) == Rgb{75, 150, 30});
  CHECK(row_up.at(3, 0) == Rgb{100, 200, 40});
}

TEST_CASE("apply_augmentation rejects scales that collapse the image") {
  const Image tiny(ImageDims{1, 1});
  CHECK(code_of([&] { apply_augmentation(tiny, Augmentation::scale(0.25)); }) ==
        ErrorCode::ScaleTooSmall);
}

TEST_CASE("box_fill_mask examples") {
  const BinaryMask full = box_fill_mask(BBox{0, 0, 4, 4}, {4, 4});
  CHECK(full.count() == 16);

  const BinaryMask corner = box_fill_mask(BBox{0, 0, 2, 2}, {4, 4});
  CHECK(corner.count() == 4);
  CHECK(corner.at(0, 0));
  CHECK(corner.at(1, 0));
  CHECK(corner.at(0, 1));
  CHECK(corner.at(1, 1));

  // Centres 0.5 and 1.5 lie in [0.5, 2.5); 2.5 does not.
  const BinaryMask shifted = box_fill_mask(BBox{0.5, 0.5, 2.5, 2.5}, {4, 4});
  CHECK(shifted.count() == 4);
  CHECK(shifted.at(0, 0));
  CHECK(shifted.at(1, 0));
  CHECK(shifted.at(0, 1));
  CHECK(shifted.at(1, 1));
  CHECK_FALSE(shifted.at(2, 2));
}

TEST_CASE("box_fill_mask equals brute-force centre test") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> coord(-4.0, 68.0);
  std::uniform_int_distribution<int> side(1, 64);
  for (int trial = 0; trial < 300; ++trial) {
    const ImageDims dims{side(rng), side(rng)};
    double a = coord(rng), b = coord(rng), c = coord(rng), d = coord(rng);
    const BBox box{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
    const BinaryMask m = box_fill_mask(box, dims);
    std::size_t expected = 0;
    for (int y = 0; y < dims.height; ++y) {
      for (int x = 0; x < dims.width; ++x) {
        const double cx = x + 0.5, cy = y + 0.5;
        const bool inside = cx >= box.x1 && cx < box.x2 && cy >= box.y1 && cy < box.y2;
        expected += inside;
        CHECK(m.at(x, y) == inside);
      }
    }
    CHECK(m.count() == expected);
  }
}

TEST_CASE("mask codec") {
  SUBCASE("all zero round trip") {
    const BinaryMask zero(ImageDims{5, 3});
    CHECK(mask_decode(mask_encode(zero)) == zero);
  }
  SUBCASE("checkerboard round trip") {
    BinaryMask board(ImageDims{4, 4});
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) board.set(x, y, (x + y) % 2 == 0);
    }
    CHECK(mask_decode(mask_encode(board)) == board);
  }
  SUBCASE("random masks round trip") {
    std::mt19937 rng(11);
    for (int i = 0; i < 20; ++i) {
      BinaryMask m(ImageDims{static_cast<int>(rng() % 40 + 1), static_cast<int>(rng() % 40 + 1)});
      for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) m.set(x, y, rng() % 2);
      }
      CHECK(mask_decode(mask_encode(m)) == m);
    }
  }
  SUBCASE("threshold at 128") {
    const auto high = png_with_format(PNG_FORMAT_GRAY, 1, 2, 2);  // value 200
    CHECK(mask_decode(high).count() == 4);
    std::vector<std::uint8_t> vals{10, 127, 128, 255};
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = 2;
    image.height = 2;
    image.format = PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    png_image_write_to_memory(&image, nullptr, &size, 0, vals.data(), 0, nullptr);
    std::vector<std::uint8_t> png(size);
    png_image_write_to_memory(&image, png.data(), &size, 0, vals.data(), 0, nullptr);
    const BinaryMask m = mask_decode(png);
    CHECK_FALSE(m.at(0, 0));
    CHECK_FALSE(m.at(1, 0));
    CHECK(m.at(0, 1));
    CHECK(m.at(1, 1));
  }
  SUBCASE("bad formats") {
    CHECK(code_of([] { mask_decode(png_with_format(PNG_FORMAT_RGB, 3, 2, 2)); }) ==
          ErrorCode::BadMaskFormat);
    CHECK(code_of([] { mask_decode(png_with_format(PNG_FORMAT_LINEAR_Y, 1, 2, 2)); }) ==
          ErrorCode::BadMaskFormat);
    CHECK(code_of([] { mask_decode(std::vector<std::uint8_t>{1, 2, 3}); }) ==
          ErrorCode::BadMaskFormat);
  }
}

TEST_CASE("image codec round trip and format detection") {
  const Image img = ramp_image({13, 7}, {2, 2, 6, 5});
  CHECK(decode_image(encode_png(img)) == img);
  // Grayscale PNGs load as RGB.
  const Image gray = decode_image(png_with_format(PNG_FORMAT_GRAY, 1, 3, 2));
  CHECK(gray.at(0, 0) == Rgb{200, 200, 200});
  CHECK(code_of([] { decode_image(std::vector<std::uint8_t>{'G', 'I', 'F', '8'}); }) ==
        ErrorCode::BadImage);
}

TEST_CASE("render_som basics") {
  const Image black(ImageDims{100, 100});
  SUBCASE("no boxes is a copy") { CHECK(render_som(black, std::vector<BBox>{}) == black); }

  SUBCASE("one box touches exactly outline and tag pixels") {
    const std::vector<BBox> boxes{BBox{20, 30, 70, 80}};
    const Image out = render_som(black, boxes);
    CHECK(out.dims() == black.dims());
    CHECK(black == Image(ImageDims{100, 100}));

    // Outline: pixels 20..69 x 30..79 within 3 px of the border. Tag: 14x18
    // block anchored at (20, 30) (2 px padding around one 10x14 glyph).
    std::size_t expected = 0;
    std::size_t changed = 0;
    for (int y = 0; y < 100; ++y) {
      for (int x = 0; x < 100; ++x) {
        const bool in_box = x >= 20 && x < 70 && y >= 30 && y < 80;
        const bool outline = in_box && (x < 23 || x >= 67 || y < 33 || y >= 77);
        const bool tag = x >= 20 && x < 34 && y >= 30 && y < 48;
        expected += outline || tag;
        changed += out.at(x, y) != Rgb{0, 0, 0};
      }
    }
    CHECK(expected == 729);
    CHECK(changed == expected);
    CHECK(out.at(69, 79) == MarkStyle::default_palette()[0]);
  }

  SUBCASE("palette cycles and tags stay inside the frame") {
    std::vector<BBox> boxes;
    for (int k = 0; k < 10; ++k) boxes.push_back(BBox{double(k * 9), 80, double(k * 9 + 9), 100});
    const Image out = render_som(black, boxes);
    CHECK(out.at(0, 99) == MarkStyle::default_palette()[0]);
    CHECK(out.at(8 * 9, 99) == MarkStyle::default_palette()[0]);
    CHECK(out.at(9 * 9, 99) == MarkStyle::default_palette()[1]);
  }

  SUBCASE("style validation") {
    MarkStyle style;
    style.palette.pop_back();
    CHECK_THROWS_AS(render_som(black, std::vector<BBox>{}, style), Error);
    MarkStyle dup;
    dup.palette[1] = dup.palette[0];
    CHECK_THROWS_AS(render_som(black, std::vector<BBox>{}, dup), Error);
    MarkStyle thin;
    thin.outline_width_px = 0;
    CHECK_THROWS_AS(render_som(black, std::vector<BBox>{}, thin), Error);
  }
}

TEST_CASE("render_som matches frozen golden renders") {
  for (const auto& f : segagent::testing::som_golden_fixtures()) {
    CAPTURE(f.name);
    const Image golden = load_image(segagent::testing::golden_dir() / (f.name + ".png"));
    CHECK(render_som(f.base, f.boxes) == golden);
  }
}
