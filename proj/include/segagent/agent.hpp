#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "segagent/backends.hpp"
#include "segagent/geometry.hpp"
#include "segagent/image.hpp"
#include "segagent/prompts.hpp"
#include "segagent/som.hpp"

namespace segagent {

struct ChainConfig {
  std::vector<Augmentation> augmentations = default_augmentations();
  double nms_iou_threshold = 0.8;
  bool enable_selection = true;
  bool enable_refinement = true;
  int refinement_rounds = 1;
  PromptTemplates prompts;
  MarkStyle mark_style;
  BackendConfig mllm;
  BackendConfig segmenter;
  // Issue the per-view generation queries in parallel. Results are merged in
  // augmentation order either way.
  bool parallel_generation = true;
};

/// Throws Config when an invariant is broken.
void validate(const ChainConfig& cfg);

/// Single Identity view, selection and refinement off: the direct
/// one-query baseline.
ChainConfig baseline_config(ChainConfig cfg);

enum class Degradation { GenerationPartial, SelectionFellBack, RefinementFellBack };
std::string_view to_string(Degradation d);

struct ViewRecord {
  int index = 0;
  std::string augmentation;
  ImageDims view_dims;
  std::optional<BBox> view_box;
  std::optional<BBox> original_box;
  std::string failure;
};

struct SomRecord {
  std::string stage;
  int round = 0;
  std::vector<BBox> boxes;
  ImageDims dims;
  std::string pixels_sha256;
};

struct MaskRecord {
  ImageDims dims;
  std::size_t ones = 0;
  std::string bits_sha256;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

/// Everything the chain did, in execution order. Timings are kept apart from
/// the rest because they differ between otherwise identical runs.
struct ChainTrace {
  std::string instruction;
  ImageDims image_dims;
  std::vector<ViewRecord> views;
  std::vector<ScoredCandidate> candidates;
  std::vector<ScoredCandidate> survivors;
  std::vector<SomRecord> som;
  std::optional<int> selected_mark;
  std::optional<BBox> selected;
  std::vector<BBox> refinement_steps;
  std::optional<BBox> refined;
  std::optional<MaskRecord> mask;
  std::vector<CallRecord> calls;
  std::vector<std::string> stages;
  std::vector<StageTiming> timings;
};

struct ChainResult {
  BBox final_box;
  BinaryMask mask;
  ChainTrace trace;
  std::set<Degradation> flags;
  std::vector<Image> som_images;
};

/// Optional sink for trace data while running individual stages.
struct ChainRecorder {
  ChainTrace trace;
  std::set<Degradation> flags;
  std::vector<Image> som_images;
};

/// Queries every augmented view, maps the boxes back to the original frame
/// and scores them by consensus. Throws AllCandidatesFailed when no view
/// yields a usable box (Transport if any view failed on the network).
std::vector<ScoredCandidate> run_generation(const Image& img, const std::string& instruction,
                                            const ChainConfig& cfg, MllmBackend& mllm,
                                            ChainRecorder* rec = nullptr);

/// NMS, then Set-of-Mark comparison among the survivors.
BBox run_selection(const Image& img, const std::string& instruction,
                   const std::vector<ScoredCandidate>& candidates, const ChainConfig& cfg,
                   MllmBackend& mllm, ChainRecorder* rec = nullptr);

/// Up to refinement_rounds adjustment queries; failures keep the current box.
BBox run_refinement(const Image& img, const std::string& instruction, const BBox& selected,
                    const ChainConfig& cfg, MllmBackend& mllm, ChainRecorder* rec = nullptr);

/// Generation, selection, refinement, then segmentation of the final box.
/// sample_key is forwarded to the segmenter.
ChainResult run_chain(const Image& img, const std::string& instruction, const ChainConfig& cfg,
                      MllmBackend& mllm, Segmenter& segmenter, std::string_view sample_key = {});

/// Deterministic JSON of a trace, timings excluded.
nlohmann::json trace_to_json(const ChainTrace& trace);
nlohmann::json timings_to_json(const ChainTrace& trace);
nlohmann::json box_to_json(const BBox& b);

}  // namespace segagent
