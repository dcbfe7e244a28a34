#include "segagent/prompts.hpp"

#include <cmath>

namespace segagent {

namespace {

void replace_all(std::string& s, std::string_view key, std::string_view value) {
  for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size())) {
    s.replace(pos, key.size(), value);
  }
}

long round_half_up(double v) { return static_cast<long>(std::floor(v + 0.5)); }

}  // namespace

std::string format_box_coords(const BBox& b) {
  return "[" + std::to_string(round_half_up(b.x1)) + "," + std::to_string(round_half_up(b.y1)) +
         "," + std::to_string(round_half_up(b.x2)) + "," + std::to_string(round_half_up(b.y2)) +
         "]";
}

std::string format_mark_list(std::span<const BBox> boxes) {
  std::string out;
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    if (k) out += "; ";
    out += std::to_string(k + 1) + ": " + format_box_coords(boxes[k]);
  }
  return out;
}

// The instruction is substituted last so braces inside user text are left
// alone.
std::string render_generation_prompt(const PromptTemplates& t, std::string_view instruction) {
  std::string s = t.generation;
  replace_all(s, "{instruction}", instruction);
  return s;
}

std::string render_selection_prompt(const PromptTemplates& t, std::string_view instruction,
                                    std::span<const BBox> marks) {
  std::string s = t.selection;
  replace_all(s, "{list}", format_mark_list(marks));
  replace_all(s, "{instruction}", instruction);
  return s;
}

std::string render_refinement_prompt(const PromptTemplates& t, std::string_view instruction,
                                     const BBox& current) {
  std::string s = t.refinement;
  replace_all(s, "{coords}", format_box_coords(current));
  replace_all(s, "{instruction}", instruction);
  return s;
}

}  // namespace segagent
