#include "segagent/backends.hpp"

#include <cmath>
#include <cstdlib>

#include "json.hpp"

#include "segagent/error.hpp"

namespace segagent {

namespace {

using nlohmann::json;

// End index (exclusive) of the balanced {...} starting at open, honouring
// JSON string escapes; npos when unbalanced.
std::size_t match_brace(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::optional<json> find_object_with_key(std::string_view raw, std::string_view key) {
  for (std::size_t open = raw.find('{'); open != std::string_view::npos;
       open = raw.find('{', open + 1)) {
    const std::size_t end = match_brace(raw, open);
    if (end == std::string_view::npos) continue;
    json j = json::parse(raw.substr(open, end - open), nullptr, /*allow_exceptions=*/false);
    if (j.is_object() && j.contains(key)) return j;
  }
  return std::nullopt;
}

std::optional<BBox> extract_box(std::string_view raw, const ImageDims& dims) {
  const auto obj = find_object_with_key(raw, "bbox");
  if (!obj) return std::nullopt;
  const json& arr = (*obj)["bbox"];
  if (!arr.is_array() || arr.size() != 4) {
    throw Error(ErrorCode::ParseFailure, "\"bbox\" must be an array of four numbers");
  }
  double v[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!arr[i].is_number()) throw Error(ErrorCode::ParseFailure, "non-numeric bbox coordinate");
    v[i] = arr[i].get<double>();
    if (!std::isfinite(v[i])) throw Error(ErrorCode::ParseFailure, "non-finite bbox coordinate");
  }
  const BBox ordered{std::min(v[0], v[2]), std::min(v[1], v[3]), std::max(v[0], v[2]),
                     std::max(v[1], v[3])};
  return clamp_box(ordered, dims);
}

std::string getenv_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

}  // namespace

std::string_view to_string(MllmRole role) {
  switch (role) {
    case MllmRole::Generation: return "generation";
    case MllmRole::Selection: return "selection";
    case MllmRole::Refinement: return "refinement";
  }
  return "unknown";
}

void validate(const MllmRequest& req) {
  if (req.prompt.empty()) throw Error(ErrorCode::InvalidArgument, "empty prompt");
  if (req.image.empty()) throw Error(ErrorCode::InvalidArgument, "request carries no image");
}

void validate(const BackendConfig& cfg) {
  if (!(cfg.timeout_seconds > 0.0)) throw Error(ErrorCode::Config, "timeout must be positive");
  if (cfg.max_retries < 0) throw Error(ErrorCode::Config, "retries must be >= 0");
  if (!std::isfinite(cfg.temperature) || cfg.temperature < 0.0) {
    throw Error(ErrorCode::Config, "temperature must be a non-negative number");
  }
}

BackendConfig mllm_config_from_env() {
  BackendConfig cfg;
  cfg.endpoint = getenv_or_empty("SEG_AGENT_MLLM_URL");
  cfg.model = getenv_or_empty("SEG_AGENT_MLLM_MODEL");
  cfg.api_key = getenv_or_empty("SEG_AGENT_API_KEY");
  return cfg;
}

BackendConfig segmenter_config_from_env() {
  BackendConfig cfg;
  cfg.endpoint = getenv_or_empty("SEG_AGENT_SEG_URL");
  cfg.api_key = getenv_or_empty("SEG_AGENT_API_KEY");
  return cfg;
}

BBox parse_generation_reply(std::string_view raw, const ImageDims& dims) {
  auto box = extract_box(raw, dims);
  if (!box) throw Error(ErrorCode::ParseFailure, "no JSON object with a \"bbox\" key");
  return *box;
}

int parse_selection_reply(std::string_view raw, std::size_t num_marks) {
  const auto obj = find_object_with_key(raw, "choice");
  if (!obj) throw Error(ErrorCode::ParseFailure, "no JSON object with a \"choice\" key");
  const json& c = (*obj)["choice"];
  if (!c.is_number()) throw Error(ErrorCode::ParseFailure, "\"choice\" is not a number");
  const double v = c.get<double>();
  if (!std::isfinite(v) || v != std::floor(v)) {
    throw Error(ErrorCode::ParseFailure, "\"choice\" is not an integer");
  }
  if (v < 1.0 || v > static_cast<double>(num_marks)) {
    throw Error(ErrorCode::ChoiceOutOfRange, "choice " + std::to_string(static_cast<long>(v)) +
                                                 " outside 1.." + std::to_string(num_marks));
  }
  return static_cast<int>(v);
}

BBox parse_refinement_reply(std::string_view raw, const ImageDims& dims, const BBox& current) {
  if (auto box = extract_box(raw, dims)) return *box;
  if (const auto obj = find_object_with_key(raw, "keep")) {
    if ((*obj)["keep"] == true) return current;
  }
  throw Error(ErrorCode::ParseFailure, "no JSON object with a \"bbox\" or \"keep\" key");
}

MllmReply mllm_query(MllmBackend& backend, const BackendConfig& cfg, const MllmRequest& req,
                     std::vector<CallRecord>* log) {
  validate(req);
  std::string last_error;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    MllmRequest sent = req;
    sent.attempt = attempt;
    if (attempt > 0) {
      sent.prompt += "\n";
      sent.prompt += kFormatReminder;
    }
    CallRecord rec{req.role, req.stage_index, attempt, sent.prompt, {}, false, {}};
    try {
      rec.raw_text = backend.complete(cfg, sent);
    } catch (const Error& e) {
      rec.error = e.what();
      if (log) log->push_back(std::move(rec));
      throw;
    }

    MllmReply reply{rec.raw_text, std::nullopt};
    try {
      switch (req.role) {
        case MllmRole::Generation:
          reply.parsed = parse_generation_reply(rec.raw_text, sent.image.dims());
          break;
        case MllmRole::Selection:
          reply.parsed = parse_selection_reply(rec.raw_text, req.context.size());
          break;
        case MllmRole::Refinement: {
          if (req.context.empty()) throw Error(ErrorCode::InvalidArgument, "refinement needs a box");
          reply.parsed = parse_refinement_reply(rec.raw_text, sent.image.dims(), req.context.front());
          break;
        }
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvalidArgument) throw;
      last_error = e.what();
      rec.error = last_error;
    }
    rec.parsed = reply.parsed.has_value();
    if (log) log->push_back(rec);
    if (reply.parsed) return reply;
  }
  throw Error(ErrorCode::ParseFailure, std::string(to_string(req.role)) + " reply unusable after " +
                                           std::to_string(cfg.max_retries + 1) +
                                           " attempts: " + last_error);
}

BinaryMask segment(Segmenter& segmenter, const BackendConfig& cfg, const Image& img,
                   const BBox& box, std::string_view sample_key) {
  BinaryMask mask = segmenter.segment(cfg, img, box, sample_key);
  if (mask.dims() != img.dims()) {
    throw Error(ErrorCode::DimsMismatch,
                "segmenter returned " + std::to_string(mask.width()) + "x" +
                    std::to_string(mask.height()) + " mask for " + std::to_string(img.width()) +
                    "x" + std::to_string(img.height()) + " image");
  }
  return mask;
}

}  // namespace segagent
