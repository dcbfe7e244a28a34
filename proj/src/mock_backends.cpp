#include "segagent/mock_backends.hpp"

#include <fstream>

#include "segagent/error.hpp"

namespace segagent {

using nlohmann::json;

namespace {

MllmRole parse_role(const std::string& s) {
  if (s == "generation") return MllmRole::Generation;
  if (s == "selection") return MllmRole::Selection;
  if (s == "refinement") return MllmRole::Refinement;
  throw Error(ErrorCode::Config, "unknown role '" + s + "' in mock script");
}

std::string bbox_reply(const BBox& b) {
  return json{{"bbox", json::array({b.x1, b.y1, b.x2, b.y2})}}.dump();
}

}  // namespace

ScriptedMllm::ScriptedMllm(std::vector<Rule> rules, std::string default_reply)
    : rules_(std::move(rules)), default_reply_(std::move(default_reply)) {}

ScriptedMllm ScriptedMllm::from_json(const json& j) {
  std::vector<Rule> rules;
  std::string default_reply;
  try {
    if (j.contains("default_reply")) default_reply = j.at("default_reply").get<std::string>();
    if (j.contains("rules")) {
      for (const json& r : j.at("rules")) {
        Rule rule;
        if (r.contains("role")) rule.role = parse_role(r.at("role").get<std::string>());
        if (r.contains("instruction")) rule.instruction = r.at("instruction").get<std::string>();
        if (r.contains("stage")) rule.stage = r.at("stage").get<int>();
        if (r.contains("replies")) rule.replies = r.at("replies").get<std::vector<std::string>>();
        if (r.contains("box")) {
          const auto v = r.at("box").get<std::vector<double>>();
          if (v.size() != 4) throw Error(ErrorCode::Config, "mock box needs four numbers");
          rule.box = BBox{v[0], v[1], v[2], v[3]};
          rule.box_in_original_frame = r.value("frame", std::string("view")) == "original";
        }
        if (rule.replies.empty() && !rule.box) {
          throw Error(ErrorCode::Config, "mock rule needs \"replies\" or \"box\"");
        }
        rules.push_back(std::move(rule));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, std::string("bad mock script: ") + e.what());
  }
  return ScriptedMllm(std::move(rules), std::move(default_reply));
}

std::string ScriptedMllm::complete(const BackendConfig&, const MllmRequest& req) {
  for (const Rule& r : rules_) {
    if (r.role && *r.role != req.role) continue;
    if (r.instruction && *r.instruction != req.instruction) continue;
    if (r.stage && *r.stage != req.stage_index) continue;
    if (r.box) {
      BBox b = *r.box;
      if (r.box_in_original_frame && req.view) b = forward_box(*req.view, b, req.original_dims);
      return bbox_reply(b);
    }
    const std::size_t i = std::min(static_cast<std::size_t>(req.attempt), r.replies.size() - 1);
    return r.replies[i];
  }
  return default_reply_;
}

BinaryMask BoxFillSegmenter::segment(const BackendConfig&, const Image& img, const BBox& box,
                                     std::string_view) {
  return box_fill_mask(box, img.dims());
}

OracleSegmenter::OracleSegmenter(std::map<std::string, BinaryMask, std::less<>> masks)
    : masks_(std::move(masks)) {}

void OracleSegmenter::add(std::string key, BinaryMask mask) {
  masks_.insert_or_assign(std::move(key), std::move(mask));
}

BinaryMask OracleSegmenter::segment(const BackendConfig&, const Image&, const BBox&,
                                    std::string_view sample_key) {
  const auto it = masks_.find(sample_key);
  if (it == masks_.end()) {
    throw Error(ErrorCode::InvalidArgument,
                "oracle segmenter has no mask for '" + std::string(sample_key) + "'");
  }
  return it->second;
}

MockBackends mock_backends_from_json(const json& j, const std::filesystem::path& base_dir) {
  MockBackends out;
  out.mllm = std::make_unique<ScriptedMllm>(
      ScriptedMllm::from_json(j.contains("mllm") ? j.at("mllm") : json::object()));

  const json seg = j.contains("segmenter") ? j.at("segmenter") : json{{"kind", "box-fill"}};
  const std::string kind = seg.value("kind", std::string("box-fill"));
  if (kind == "box-fill") {
    out.segmenter = std::make_unique<BoxFillSegmenter>();
  } else if (kind == "oracle") {
    auto oracle = std::make_unique<OracleSegmenter>();
    if (seg.contains("masks")) {
      for (const auto& [key, rel] : seg.at("masks").items()) {
        oracle->add(key, load_mask(base_dir / rel.get<std::string>()));
      }
    }
    if (oracle->empty()) out.unfilled_oracle = oracle.get();
    out.segmenter = std::move(oracle);
  } else {
    throw Error(ErrorCode::Config, "unknown mock segmenter kind '" + kind + "'");
  }
  return out;
}

MockBackends load_mock_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot open mock script " + path.string());
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::Config, "mock script " + path.string() + " is not a JSON object");
  }
  return mock_backends_from_json(j, path.parent_path());
}

}  // namespace segagent
