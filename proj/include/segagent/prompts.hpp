#pragma once

#include <span>
#include <string>
#include <string_view>

#include "segagent/geometry.hpp"

namespace segagent {

/// Prompt templates for the three chain roles. Placeholders: {instruction}
/// in all three, {list} in selection, {coords} in refinement.
struct PromptTemplates {
  std::string generation = std::string(kGeneration);
  std::string selection = std::string(kSelection);
  std::string refinement = std::string(kRefinement);

  static constexpr std::string_view kGeneration =
      "You are given an image and a target description: '{instruction}'. Output the bounding box "
      "of the target as JSON: {\"bbox\":[x1,y1,x2,y2]} in absolute pixel coordinates. Output "
      "only the JSON.";
  static constexpr std::string_view kSelection =
      "The image shows numbered candidate boxes: {list}. Which numbered box best covers the "
      "target '{instruction}'? Answer only JSON: {\"choice\":k}.";
  static constexpr std::string_view kRefinement =
      "The image shows one candidate box {coords} for the target '{instruction}'. If the box "
      "should be adjusted to cover the target precisely, output the adjusted box as JSON "
      "{\"bbox\":[x1,y1,x2,y2]}; otherwise repeat the same box.";
};

/// "[x1,y1,x2,y2]" with each coordinate rounded half-up to an integer.
std::string format_box_coords(const BBox& b);
/// "1: [..]; 2: [..]" in mark order.
std::string format_mark_list(std::span<const BBox> boxes);

std::string render_generation_prompt(const PromptTemplates& t, std::string_view instruction);
std::string render_selection_prompt(const PromptTemplates& t, std::string_view instruction,
                                    std::span<const BBox> marks);
std::string render_refinement_prompt(const PromptTemplates& t, std::string_view instruction,
                                     const BBox& current);

}  // namespace segagent
