#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "segagent/backends.hpp"

namespace segagent {

/// A vision-language model that answers from a fixed script. Replies are a
/// pure function of (request, script), so the backend needs no locking.
///
/// Script rules are tried in order; the first whose present fields all match
/// the request wins:
///   role         "generation" | "selection" | "refinement"
///   instruction  exact instruction text
///   stage        augmentation index (generation) or round (refinement)
///   replies      list of raw replies indexed by attempt; the last repeats
///   box          [x1,y1,x2,y2] rendered as {"bbox":[...]}; with
///                "frame": "original" the box is mapped into the view's frame
/// Requests that match no rule get default_reply (empty when absent).
class ScriptedMllm : public MllmBackend {
 public:
  struct Rule {
    std::optional<MllmRole> role;
    std::optional<std::string> instruction;
    std::optional<int> stage;
    std::vector<std::string> replies;
    std::optional<BBox> box;
    bool box_in_original_frame = false;
  };

  ScriptedMllm() = default;
  explicit ScriptedMllm(std::vector<Rule> rules, std::string default_reply = {});

  /// Parses the "mllm" section of a mock script.
  static ScriptedMllm from_json(const nlohmann::json& j);

  std::string complete(const BackendConfig& cfg, const MllmRequest& req) override;

 private:
  std::vector<Rule> rules_;
  std::string default_reply_;
};

/// Returns box_fill_mask of the prompt box.
class BoxFillSegmenter : public Segmenter {
 public:
  BinaryMask segment(const BackendConfig& cfg, const Image& img, const BBox& box,
                     std::string_view sample_key) override;
};

/// Returns the mask registered for the sample key and ignores the box.
/// Unknown keys throw InvalidArgument.
class OracleSegmenter : public Segmenter {
 public:
  OracleSegmenter() = default;
  explicit OracleSegmenter(std::map<std::string, BinaryMask, std::less<>> masks);

  void add(std::string key, BinaryMask mask);
  bool empty() const { return masks_.empty(); }

  BinaryMask segment(const BackendConfig& cfg, const Image& img, const BBox& box,
                     std::string_view sample_key) override;

 private:
  std::map<std::string, BinaryMask, std::less<>> masks_;
};

struct MockBackends {
  std::unique_ptr<ScriptedMllm> mllm;
  std::unique_ptr<Segmenter> segmenter;
  // Set when the script asks for an oracle segmenter without listing masks;
  // the caller fills it (e.g. from a manifest's ground truth).
  OracleSegmenter* unfilled_oracle = nullptr;
};

/// Loads a mock script: {"mllm": {...}, "segmenter": {"kind": "box-fill"}}
/// or {"segmenter": {"kind": "oracle", "masks": {"<key>": "<png path>"}}}.
/// Mask paths are relative to the script's directory.
MockBackends load_mock_script(const std::filesystem::path& path);
MockBackends mock_backends_from_json(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir);

}  // namespace segagent
