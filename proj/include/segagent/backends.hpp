#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "segagent/geometry.hpp"
#include "segagent/image.hpp"

namespace segagent {

enum class MllmRole { Generation, Selection, Refinement };

std::string_view to_string(MllmRole role);

/// One chat-style query to the vision-language model. The routing fields
/// (stage_index, view, original_dims, attempt) never go on the wire; they let
/// scripted backends and the trace identify the call.
struct MllmRequest {
  MllmRole role = MllmRole::Generation;
  Image image;
  std::string instruction;
  std::string prompt;
  std::vector<BBox> context;

  int stage_index = 0;
  std::optional<Augmentation> view;
  ImageDims original_dims;
  int attempt = 0;
};

void validate(const MllmRequest& req);

/// Box for Generation/Refinement, 1-based mark index for Selection.
using ReplyPayload = std::variant<BBox, int>;

struct MllmReply {
  std::string raw_text;
  std::optional<ReplyPayload> parsed;
};

struct BackendConfig {
  std::string endpoint;
  std::string model;
  std::string api_key;
  double timeout_seconds = 60.0;
  int max_retries = 2;
  double temperature = 0.0;
};

void validate(const BackendConfig& cfg);

/// Reads SEG_AGENT_MLLM_URL, SEG_AGENT_MLLM_MODEL and SEG_AGENT_API_KEY.
BackendConfig mllm_config_from_env();
/// Reads SEG_AGENT_SEG_URL and SEG_AGENT_API_KEY.
BackendConfig segmenter_config_from_env();

class MllmBackend {
 public:
  virtual ~MllmBackend() = default;
  /// Sends a single request and returns the model's reply text. Throws
  /// Error(Transport) on network failures. Must be safe to call concurrently.
  virtual std::string complete(const BackendConfig& cfg, const MllmRequest& req) = 0;
};

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  /// sample_key identifies the sample being segmented; only lookup-style
  /// mocks use it. Must be safe to call concurrently.
  virtual BinaryMask segment(const BackendConfig& cfg, const Image& img, const BBox& box,
                             std::string_view sample_key) = 0;
};

/// One attempt as recorded in the chain trace.
struct CallRecord {
  MllmRole role = MllmRole::Generation;
  int stage_index = 0;
  int attempt = 0;
  std::string prompt;
  std::string raw_text;
  bool parsed = false;
  std::string error;
};

// Reply grammar: the first JSON object embedded in the text that carries
// the role's key ("bbox" with four numbers, or "choice" with an integer).

/// Orders the coordinates and clamps to dims. Throws ParseFailure or
/// DegenerateBox.
BBox parse_generation_reply(std::string_view raw, const ImageDims& dims);
/// Returns the 1-based choice. Throws ParseFailure, or ChoiceOutOfRange when
/// the choice is outside [1, num_marks].
int parse_selection_reply(std::string_view raw, std::size_t num_marks);
/// Accepts a "bbox" payload (clamped like generation) or {"keep": true},
/// which returns current unchanged.
BBox parse_refinement_reply(std::string_view raw, const ImageDims& dims, const BBox& current);

/// Appended to the prompt on every retry after a parse failure.
inline constexpr std::string_view kFormatReminder =
    "Respond with only the JSON object and no other text.";

/// Sends req, parses the reply for req.role and retries with a format
/// reminder up to cfg.max_retries times. Every attempt is appended to log
/// when given. Throws ParseFailure once retries are exhausted; Transport
/// errors propagate immediately.
MllmReply mllm_query(MllmBackend& backend, const BackendConfig& cfg, const MllmRequest& req,
                     std::vector<CallRecord>* log = nullptr);

/// Runs the segmenter and enforces that the mask matches the image dims
/// (DimsMismatch otherwise).
BinaryMask segment(Segmenter& segmenter, const BackendConfig& cfg, const Image& img,
                   const BBox& box, std::string_view sample_key = {});

}  // namespace segagent
