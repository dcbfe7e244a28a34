#pragma once

#include <span>
#include <vector>

#include "segagent/geometry.hpp"
#include "segagent/image.hpp"

namespace segagent {

/// Set-of-Mark drawing style. Each mark is a coloured outline plus a filled
/// tag at the box's top-left corner holding the 1-based mark number.
struct MarkStyle {
  int outline_width_px = 3;
  std::vector<Rgb> palette = default_palette();
  int glyph_scale = 2;
  int tag_padding_px = 2;

  static std::vector<Rgb> default_palette();
};

/// Throws InvalidArgument if the style breaks its invariants (width < 1,
/// fewer than 8 colours, duplicate colours).
void validate(const MarkStyle& style);

/// Returns a copy of img with box k outlined in palette[k % size] and tagged
/// with the numeral k + 1. Boxes are drawn in list order.
Image render_som(const Image& img, std::span<const BBox> boxes, const MarkStyle& style = {});

}  // namespace segagent
