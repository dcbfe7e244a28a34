#include "fixtures.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <unistd.h>

#include "segagent/error.hpp"

namespace segagent::testing {

namespace fs = std::filesystem;
using nlohmann::json;

TempDir::TempDir() {
  std::string pattern = (fs::temp_directory_path() / "segagent-test-XXXXXX").string();
  if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Image ramp_image(ImageDims dims, IntBox rect, Rgb rect_colour) {
  Image img(dims);
  for (int y = 0; y < dims.height; ++y) {
    for (int x = 0; x < dims.width; ++x) {
      const bool in = x >= rect.x1 && x < rect.x2 && y >= rect.y1 && y < rect.y2;
      img.set(x, y,
              in ? rect_colour
                 : Rgb{static_cast<std::uint8_t>((x * 255) / std::max(1, dims.width - 1)),
                       static_cast<std::uint8_t>((y * 255) / std::max(1, dims.height - 1)),
                       static_cast<std::uint8_t>(((x + y) * 7) % 256)});
    }
  }
  return img;
}

BinaryMask rect_mask(ImageDims dims, IntBox rect) {
  BinaryMask m(dims);
  for (int y = 0; y < dims.height; ++y) {
    for (int x = 0; x < dims.width; ++x) {
      m.set(x, y, x >= rect.x1 && x < rect.x2 && y >= rect.y1 && y < rect.y2);
    }
  }
  return m;
}

std::vector<SomGolden> som_golden_fixtures() {
  const Image black(ImageDims{100, 100});
  return {
      {"som_0box", black, {}},
      {"som_1box", black, {BBox{20, 30, 70, 80}}},
      {"som_2box", black, {BBox{10, 10, 60, 60}, BBox{40, 45, 90, 95}}},
  };
}

fs::path golden_dir() { return fs::path(SEGAGENT_TEST_DATA_DIR) / "golden"; }

fs::path write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  return path;
}

fs::path write_manifest(const fs::path& dir, const std::vector<FixtureSample>& samples) {
  const ImageDims dims{100, 100};
  const fs::path manifest = dir / "manifest.jsonl";
  std::ofstream out(manifest);
  for (const auto& s : samples) {
    write_file(dir / (s.id + ".png"), encode_png(ramp_image(dims, s.gt)));
    write_file(dir / (s.id + "_mask.png"), mask_encode(rect_mask(dims, s.gt)));
    out << json{{"id", s.id},
                {"image", s.id + ".png"},
                {"text", s.text},
                {"mask", s.id + "_mask.png"},
                {"scenario", s.scenario}}
               .dump()
        << "\n";
  }
  return manifest;
}

namespace {

json gen_rule(const std::string& text, int stage, std::vector<double> box) {
  return json{{"role", "generation"},
              {"instruction", text},
              {"stage", stage},
              {"box", box},
              {"frame", "original"}};
}

std::vector<FixtureSample> ablation_samples() {
  return {
      {"a_square", "ESS", "the red square", {20, 20, 60, 60}},
      {"b_shadow", "GOS", "shadow", {10, 50, 50, 90}},
      {"c_food", "RGS", "the food rich in carbohydrate", {50, 10, 90, 40}},
  };
}

json ablation_rules() {
  json rules = json::array();
  // a_square: identity view is far off, the other views disagree slightly.
  rules.push_back(gen_rule("the red square", 0, {0, 0, 40, 40}));
  rules.push_back(gen_rule("the red square", 1, {22, 22, 62, 62}));
  rules.push_back(gen_rule("the red square", 2, {18, 18, 58, 58}));
  rules.push_back(gen_rule("the red square", 3, {60, 60, 99, 99}));
  rules.push_back({{"role", "selection"},
                   {"instruction", "the red square"},
                   {"replies", {"Mark 1 fits best. {\"choice\":1}"}}});
  rules.push_back({{"role", "refinement"},
                   {"instruction", "the red square"},
                   {"replies", {"{\"bbox\":[20,20,60,60]}"}}});
  // b_shadow and c_food: every view agrees on the truth.
  for (const auto& [text, box] :
       std::vector<std::pair<std::string, std::vector<double>>>{
           {"shadow", {10, 50, 50, 90}}, {"the food rich in carbohydrate", {50, 10, 90, 40}}}) {
    rules.push_back({{"role", "generation"}, {"instruction", text}, {"box", box}, {"frame", "original"}});
    rules.push_back({{"role", "refinement"}, {"instruction", text}, {"replies", {"{\"keep\": true}"}}});
  }
  return rules;
}

}  // namespace

fs::path write_ablation_fixture(const fs::path& dir) {
  const fs::path manifest = write_manifest(dir, ablation_samples());
  write_json(dir / "script.json",
             json{{"mllm", {{"rules", ablation_rules()}, {"default_reply", "I cannot find it."}}},
                  {"segmenter", {{"kind", "box-fill"}}}});
  return manifest;
}

fs::path write_robustness_fixture(const fs::path& dir) {
  auto samples = ablation_samples();
  samples.push_back({"d_unfindable", "RGS", "the invisible unicorn", {30, 30, 70, 70}});
  const fs::path manifest = write_manifest(dir, samples);
  write_json(dir / "script.json",
             json{{"mllm", {{"rules", ablation_rules()}, {"default_reply", "I cannot find it."}}},
                  {"segmenter", {{"kind", "box-fill"}}}});
  return manifest;
}

}  // namespace segagent::testing
