#include "segagent/som.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <string>
#include <tuple>

#include "segagent/error.hpp"

namespace segagent {

namespace {

constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;
constexpr int kGlyphGap = 1;

// 5x7 digits, one byte per row, bit 4 is the leftmost column.
constexpr std::array<std::array<std::uint8_t, kGlyphH>, 10> kDigits = {{
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
}};

Rgb label_ink(Rgb bg) {
  const int luma = 299 * bg.r + 587 * bg.g + 114 * bg.b;
  return luma > 140'000 ? Rgb{0, 0, 0} : Rgb{255, 255, 255};
}

void fill_rect(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, img.width());
  y1 = std::min(y1, img.height());
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) img.set(x, y, c);
  }
}

void draw_outline(Image& img, const BBox& box, int width, Rgb c) {
  const PixelSpan xs = covered_pixels(box.x1, box.x2, img.width());
  const PixelSpan ys = covered_pixels(box.y1, box.y2, img.height());
  if (xs.empty() || ys.empty()) return;
  for (int y = ys.begin; y < ys.end; ++y) {
    const bool edge_row = y < ys.begin + width || y >= ys.end - width;
    for (int x = xs.begin; x < xs.end; ++x) {
      if (edge_row || x < xs.begin + width || x >= xs.end - width) img.set(x, y, c);
    }
  }
}

void draw_tag(Image& img, const BBox& box, const std::string& text, Rgb c,
              const MarkStyle& style) {
  const int s = style.glyph_scale;
  const int pad = style.tag_padding_px;
  const int n = static_cast<int>(text.size());
  const int tag_w = 2 * pad + n * kGlyphW * s + (n - 1) * kGlyphGap * s;
  const int tag_h = 2 * pad + kGlyphH * s;

  const PixelSpan xs = covered_pixels(box.x1, box.x2, img.width());
  const PixelSpan ys = covered_pixels(box.y1, box.y2, img.height());
  // Anchor at the box corner, pushed back inside the frame when it would
  // overhang the right or bottom edge.
  int tx = std::max(0, std::min(xs.begin, img.width() - tag_w));
  int ty = std::max(0, std::min(ys.begin, img.height() - tag_h));

  fill_rect(img, tx, ty, tx + tag_w, ty + tag_h, c);
  const Rgb ink = label_ink(c);
  int gx = tx + pad;
  for (char ch : text) {
    const auto& glyph = kDigits[static_cast<std::size_t>(ch - '0')];
    for (int row = 0; row < kGlyphH; ++row) {
      for (int col = 0; col < kGlyphW; ++col) {
        if (glyph[static_cast<std::size_t>(row)] & (0x10 >> col)) {
          fill_rect(img, gx + col * s, ty + pad + row * s, gx + (col + 1) * s,
                    ty + pad + (row + 1) * s, ink);
        }
      }
    }
    gx += (kGlyphW + kGlyphGap) * s;
  }
}

}  // namespace

std::vector<Rgb> MarkStyle::default_palette() {
  return {
      {230, 25, 75},   // red
      {60, 180, 75},   // green
      {0, 130, 200},   // blue
      {245, 130, 48},  // orange
      {145, 30, 180},  // purple
      {70, 240, 240},  // cyan
      {240, 50, 230},  // magenta
      {255, 225, 25},  // yellow
  };
}

void validate(const MarkStyle& style) {
  if (style.outline_width_px < 1) throw Error(ErrorCode::InvalidArgument, "outline width < 1");
  if (style.glyph_scale < 1) throw Error(ErrorCode::InvalidArgument, "glyph scale < 1");
  if (style.tag_padding_px < 0) throw Error(ErrorCode::InvalidArgument, "negative tag padding");
  if (style.palette.size() < 8) throw Error(ErrorCode::InvalidArgument, "palette needs 8 colours");
  std::set<std::tuple<int, int, int>> seen;
  for (const Rgb& c : style.palette) {
    if (!seen.emplace(c.r, c.g, c.b).second) {
      throw Error(ErrorCode::InvalidArgument, "palette colours must be distinct");
    }
  }
}

Image render_som(const Image& img, std::span<const BBox> boxes, const MarkStyle& style) {
  validate(style);
  Image out = img;
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    const Rgb c = style.palette[k % style.palette.size()];
    draw_outline(out, boxes[k], style.outline_width_px, c);
    draw_tag(out, boxes[k], std::to_string(k + 1), c, style);
  }
  return out;
}

}  // namespace segagent
