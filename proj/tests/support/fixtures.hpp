#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.hpp"
#include "segagent/image.hpp"

namespace segagent::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Deterministic non-uniform image: a colour ramp with a filled rectangle.
Image ramp_image(ImageDims dims, IntBox rect = {0, 0, 0, 0}, Rgb rect_colour = {200, 40, 40});
BinaryMask rect_mask(ImageDims dims, IntBox rect);

struct SomGolden {
  std::string name;
  Image base;
  std::vector<BBox> boxes;
};
// The 0-, 1- and 2-box golden render fixtures.
std::vector<SomGolden> som_golden_fixtures();
std::filesystem::path golden_dir();

struct FixtureSample {
  std::string id;
  std::string scenario;
  std::string text;
  IntBox gt;
};

// Writes <id>.png, <id>_mask.png and manifest.jsonl into dir.
std::filesystem::path write_manifest(const std::filesystem::path& dir,
                                     const std::vector<FixtureSample>& samples);
std::filesystem::path write_json(const std::filesystem::path& path, const nlohmann::json& j);

// Ablation fixture: 100x100 rectangles where the identity view is off
// target, selection picks a close box and refinement snaps to the truth.
// Returns the manifest path; the mock script is written next to it as
// script.json.
std::filesystem::path write_ablation_fixture(const std::filesystem::path& dir);
// Same three samples plus one whose generation replies never parse.
std::filesystem::path write_robustness_fixture(const std::filesystem::path& dir);

}  // namespace segagent::testing
