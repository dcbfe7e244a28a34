#include "segagent/agent.hpp"

namespace segagent {

using nlohmann::json;

namespace {

json dims_json(const ImageDims& d) { return json::array({d.width, d.height}); }

json opt_box(const std::optional<BBox>& b) { return b ? box_to_json(*b) : json(nullptr); }

json candidates_json(const std::vector<ScoredCandidate>& cs) {
  json arr = json::array();
  for (const auto& c : cs) {
    arr.push_back({{"box", box_to_json(c.box)},
                   {"source_index", c.source_index},
                   {"consensus", c.consensus}});
  }
  return arr;
}

json boxes_json(const std::vector<BBox>& boxes) {
  json arr = json::array();
  for (const auto& b : boxes) arr.push_back(box_to_json(b));
  return arr;
}

}  // namespace

json box_to_json(const BBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

json trace_to_json(const ChainTrace& t) {
  json j;
  j["instruction"] = t.instruction;
  j["image_dims"] = dims_json(t.image_dims);
  j["stages"] = t.stages;

  json views = json::array();
  for (const auto& v : t.views) {
    views.push_back({{"index", v.index},
                     {"augmentation", v.augmentation},
                     {"view_dims", dims_json(v.view_dims)},
                     {"view_box", opt_box(v.view_box)},
                     {"original_box", opt_box(v.original_box)},
                     {"failure", v.failure}});
  }
  j["views"] = views;
  j["candidates"] = candidates_json(t.candidates);
  j["survivors"] = candidates_json(t.survivors);

  json som = json::array();
  for (const auto& s : t.som) {
    som.push_back({{"stage", s.stage},
                   {"round", s.round},
                   {"boxes", boxes_json(s.boxes)},
                   {"dims", dims_json(s.dims)},
                   {"pixels_sha256", s.pixels_sha256}});
  }
  j["som"] = som;
  j["selected_mark"] = t.selected_mark ? json(*t.selected_mark) : json(nullptr);
  j["selected"] = opt_box(t.selected);
  j["refinement_steps"] = boxes_json(t.refinement_steps);
  j["refined"] = opt_box(t.refined);
  j["mask"] = t.mask ? json{{"dims", dims_json(t.mask->dims)},
                            {"ones", t.mask->ones},
                            {"bits_sha256", t.mask->bits_sha256}}
                     : json(nullptr);

  json calls = json::array();
  for (const auto& c : t.calls) {
    calls.push_back({{"role", std::string(to_string(c.role))},
                     {"stage_index", c.stage_index},
                     {"attempt", c.attempt},
                     {"prompt", c.prompt},
                     {"raw_text", c.raw_text},
                     {"parsed", c.parsed},
                     {"error", c.error}});
  }
  j["calls"] = calls;
  j["mllm_calls"] = t.calls.size();
  return j;
}

json timings_to_json(const ChainTrace& t) {
  json arr = json::array();
  for (const auto& s : t.timings) arr.push_back({{"stage", s.stage}, {"seconds", s.seconds}});
  return json{{"timings", arr}};
}

}  // namespace segagent
