#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "segagent/agent.hpp"
#include "segagent/image.hpp"

namespace segagent {

enum class Scenario { ESS, GOS, RGS };

inline constexpr Scenario kScenarios[] = {Scenario::ESS, Scenario::GOS, Scenario::RGS};

std::string_view to_string(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view s);

struct Sample {
  std::string id;
  std::filesystem::path image_path;
  std::string instruction;
  std::filesystem::path mask_path;
  Scenario scenario = Scenario::ESS;
};

/// JSON-lines manifest with keys id, image, text, mask, scenario. Relative
/// paths resolve against the manifest's directory; blank lines are skipped.
/// Throws ManifestParse (with the 1-based line number) or MissingFile.
std::vector<Sample> load_manifest(const std::filesystem::path& path);

struct MaskOverlap {
  std::uint64_t intersection = 0;
  std::uint64_t union_area = 0;
  double iou = 0.0;
};

/// iou is 1.0 when both masks are empty. Throws DimsMismatch.
MaskOverlap mask_iou(const BinaryMask& pred, const BinaryMask& gt);

struct SampleScore {
  std::string id;
  Scenario scenario = Scenario::ESS;
  std::uint64_t intersection = 0;
  std::uint64_t union_area = 0;
  double iou = 0.0;
  std::vector<std::string> flags;
  std::string failure;
  std::optional<BBox> final_box;
};

struct GroupMetrics {
  std::size_t count = 0;
  std::uint64_t intersection = 0;
  std::uint64_t union_area = 0;
  // Absent for empty groups.
  std::optional<double> giou;
  std::optional<double> ciou;
};

struct MetricsReport {
  GroupMetrics overall;
  std::map<Scenario, GroupMetrics> scenarios;
  std::vector<SampleScore> samples;  // sorted by id
  std::map<std::string, std::size_t> flag_tallies;
};

/// gIoU is the mean per-sample IoU, cIoU the ratio of summed intersections
/// to summed unions; both overall and per scenario. Throws EmptyInput.
MetricsReport summarize(std::vector<SampleScore> samples);

struct EvalPair {
  BinaryMask pred;
  BinaryMask gt;
  Scenario scenario = Scenario::ESS;
};

MetricsReport compute_metrics(std::span<const EvalPair> pairs);

struct EvalOptions {
  std::size_t workers = 1;
  // Called once per sample that produced a chain result (from worker
  // threads; implementations must be thread-safe).
  std::function<void(const Sample&, const ChainResult&)> on_result;
};

/// Runs the chain on every sample. Per-sample failures score 0 and carry a
/// failure note; they never abort the run.
MetricsReport evaluate(std::span<const Sample> samples, const ChainConfig& cfg, MllmBackend& mllm,
                       Segmenter& segmenter, const EvalOptions& opts = {});

nlohmann::json report_to_json(const MetricsReport& report);
/// Fixed-width table: one column pair (gIoU, cIoU) per scenario plus overall.
std::string format_report_table(const MetricsReport& report, const std::string& method = "seg-agent");

/// Throws ManifestParse unless the per-scenario counts are 140/64/40.
void check_official_counts(const MetricsReport& report);

struct AblationRow {
  bool generation = false;
  bool selection = false;
  bool refinement = false;
  ChainConfig config;
};

/// Baseline; GM+SM; GM+RM; GM+SM+RM.
std::vector<AblationRow> ablation_rows(const ChainConfig& base);
/// gIoU per scenario and overall, one line per row.
std::string format_ablation_table(std::span<const AblationRow> rows,
                                  std::span<const MetricsReport> reports);
nlohmann::json ablation_to_json(std::span<const AblationRow> rows,
                                std::span<const MetricsReport> reports);

}  // namespace segagent
