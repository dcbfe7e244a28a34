#include "segagent/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "segagent/error.hpp"

namespace segagent {

using nlohmann::json;

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::ESS: return "ESS";
    case Scenario::GOS: return "GOS";
    case Scenario::RGS: return "RGS";
  }
  return "?";
}

std::optional<Scenario> parse_scenario(std::string_view s) {
  for (Scenario sc : kScenarios) {
    if (to_string(sc) == s) return sc;
  }
  return std::nullopt;
}

std::vector<Sample> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open manifest " + path.string());
  const auto base = path.parent_path();

  std::vector<Sample> samples;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::ManifestParse,
                path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) fail("not a JSON object");
    for (const char* key : {"id", "image", "text", "mask", "scenario"}) {
      if (!j.contains(key)) fail(std::string("missing key \"") + key + "\"");
      if (!j[key].is_string()) fail(std::string("key \"") + key + "\" must be a string");
    }
    Sample s;
    s.id = j["id"].get<std::string>();
    s.instruction = j["text"].get<std::string>();
    if (s.id.empty()) fail("empty id");
    if (s.instruction.empty()) fail("empty instruction text");
    const auto scenario = parse_scenario(j["scenario"].get<std::string>());
    if (!scenario) fail("unknown scenario \"" + j["scenario"].get<std::string>() + "\"");
    s.scenario = *scenario;
    if (!seen.insert(s.id).second) fail("duplicate id \"" + s.id + "\"");

    s.image_path = base / j["image"].get<std::string>();
    s.mask_path = base / j["mask"].get<std::string>();
    for (const auto& p : {s.image_path, s.mask_path}) {
      if (!std::filesystem::is_regular_file(p)) {
        throw Error(ErrorCode::MissingFile, path.string() + ":" + std::to_string(line_no) +
                                                ": no such file " + p.string());
      }
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

MaskOverlap mask_iou(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.dims() != gt.dims()) {
    throw Error(ErrorCode::DimsMismatch, "prediction and ground truth differ in size");
  }
  MaskOverlap o;
  const auto p = pred.bits();
  const auto g = gt.bits();
  for (std::size_t i = 0; i < p.size(); ++i) {
    o.intersection += p[i] & g[i];
    o.union_area += p[i] | g[i];
  }
  o.iou = o.union_area == 0 ? 1.0
                            : static_cast<double>(o.intersection) / static_cast<double>(o.union_area);
  return o;
}

namespace {

GroupMetrics group_metrics(const std::vector<const SampleScore*>& members) {
  GroupMetrics g;
  g.count = members.size();
  if (members.empty()) return g;
  // Summing IoUs in sorted order keeps gIoU independent of sample order.
  std::vector<double> ious;
  ious.reserve(members.size());
  for (const SampleScore* s : members) {
    ious.push_back(s->iou);
    g.intersection += s->intersection;
    g.union_area += s->union_area;
  }
  std::sort(ious.begin(), ious.end());
  double sum = 0.0;
  for (double v : ious) sum += v;
  g.giou = sum / static_cast<double>(members.size());
  // With no union anywhere every sample was empty-vs-empty (or failed), so
  // the per-sample mean is the only meaningful value.
  g.ciou = g.union_area == 0
               ? *g.giou
               : static_cast<double>(g.intersection) / static_cast<double>(g.union_area);
  return g;
}

}  // namespace

MetricsReport summarize(std::vector<SampleScore> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no samples to score");
  std::sort(samples.begin(), samples.end(),
            [](const SampleScore& a, const SampleScore& b) { return a.id < b.id; });

  MetricsReport report;
  std::vector<const SampleScore*> all;
  std::map<Scenario, std::vector<const SampleScore*>> by_scenario;
  for (const auto& s : samples) {
    all.push_back(&s);
    by_scenario[s.scenario].push_back(&s);
    for (const auto& f : s.flags) ++report.flag_tallies[f];
    if (!s.failure.empty()) ++report.flag_tallies["Failed"];
  }
  report.overall = group_metrics(all);
  for (Scenario sc : kScenarios) report.scenarios[sc] = group_metrics(by_scenario[sc]);
  report.samples = std::move(samples);
  return report;
}

MetricsReport compute_metrics(std::span<const EvalPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyInput, "no mask pairs to score");
  std::vector<SampleScore> scores;
  scores.reserve(pairs.size());
  const int width = static_cast<int>(std::to_string(pairs.size()).size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const MaskOverlap o = mask_iou(pairs[i].pred, pairs[i].gt);
    char id[32];
    std::snprintf(id, sizeof(id), "%0*zu", width, i);
    scores.push_back(SampleScore{id, pairs[i].scenario, o.intersection, o.union_area, o.iou, {}, {},
                                 std::nullopt});
  }
  return summarize(std::move(scores));
}

namespace {

SampleScore score_sample(const Sample& sample, const ChainConfig& cfg, MllmBackend& mllm,
                         Segmenter& segmenter, const EvalOptions& opts) {
  SampleScore s;
  s.id = sample.id;
  s.scenario = sample.scenario;
  std::optional<BinaryMask> gt;
  try {
    gt = load_mask(sample.mask_path);
    const Image img = load_image(sample.image_path);
    const ChainResult r = run_chain(img, sample.instruction, cfg, mllm, segmenter, sample.id);
    if (opts.on_result) opts.on_result(sample, r);
    const MaskOverlap o = mask_iou(r.mask, *gt);
    s.intersection = o.intersection;
    s.union_area = o.union_area;
    s.iou = o.iou;
    s.final_box = r.final_box;
    for (Degradation d : r.flags) s.flags.emplace_back(to_string(d));
  } catch (const std::exception& e) {
    s.failure = e.what();
    s.intersection = 0;
    s.union_area = gt ? gt->count() : 0;
    s.iou = 0.0;
    s.flags.clear();
    s.final_box.reset();
  }
  return s;
}

}  // namespace

MetricsReport evaluate(std::span<const Sample> samples, const ChainConfig& cfg, MllmBackend& mllm,
                       Segmenter& segmenter, const EvalOptions& opts) {
  validate(cfg);
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "manifest has no samples");
  std::vector<SampleScore> scores(samples.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      scores[i] = score_sample(samples[i], cfg, mllm, segmenter, opts);
    }
  };
  const std::size_t n = std::clamp<std::size_t>(opts.workers, 1, samples.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n; ++w) pool.emplace_back(worker);
    worker();
  }
  return summarize(std::move(scores));
}

namespace {

json group_json(const GroupMetrics& g) {
  return json{{"count", g.count},
              {"intersection", g.intersection},
              {"union", g.union_area},
              {"giou", g.giou ? json(*g.giou) : json(nullptr)},
              {"ciou", g.ciou ? json(*g.ciou) : json(nullptr)}};
}

std::string fmt3(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", *v);
  return buf;
}

std::string pad(const std::string& s, std::size_t w, bool right = false) {
  if (s.size() >= w) return s;
  return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
}

}  // namespace

json report_to_json(const MetricsReport& report) {
  json scenarios = json::object();
  for (const auto& [sc, g] : report.scenarios) scenarios[std::string(to_string(sc))] = group_json(g);
  json rows = json::array();
  for (const auto& s : report.samples) {
    json row{{"id", s.id},
             {"scenario", std::string(to_string(s.scenario))},
             {"iou", s.iou},
             {"intersection", s.intersection},
             {"union", s.union_area},
             {"flags", s.flags},
             {"final_box", s.final_box ? box_to_json(*s.final_box) : json(nullptr)}};
    if (!s.failure.empty()) row["failure"] = s.failure;
    rows.push_back(std::move(row));
  }
  return json{{"overall", group_json(report.overall)},
              {"scenarios", scenarios},
              {"samples", rows},
              {"flag_tallies", report.flag_tallies}};
}

std::string format_report_table(const MetricsReport& report, const std::string& method) {
  constexpr std::size_t kName = 20;
  constexpr std::size_t kCol = 8;
  const std::string headers[] = {"Explicit Semantic", "Generic Object", "Reasoning-Guided",
                                 "Overall"};
  std::ostringstream os;
  os << pad("", kName);
  for (const auto& h : headers) os << " | " << pad(h, 2 * kCol);
  os << "\n" << pad("Method", kName);
  for (std::size_t i = 0; i < 4; ++i) os << " | " << pad("gIoU", kCol, true) << pad("cIoU", kCol, true);
  os << "\n" << std::string(kName, '-');
  for (std::size_t i = 0; i < 4; ++i) os << "-+-" << std::string(2 * kCol, '-');
  os << "\n" << pad(method, kName);
  for (Scenario sc : kScenarios) {
    const GroupMetrics& g = report.scenarios.at(sc);
    os << " | " << pad(fmt3(g.giou), kCol, true) << pad(fmt3(g.ciou), kCol, true);
  }
  os << " | " << pad(fmt3(report.overall.giou), kCol, true)
     << pad(fmt3(report.overall.ciou), kCol, true) << "\n";
  os << "samples:";
  for (Scenario sc : kScenarios) os << " " << to_string(sc) << "=" << report.scenarios.at(sc).count;
  os << " total=" << report.overall.count;
  const auto failed = report.flag_tallies.find("Failed");
  os << " failed=" << (failed == report.flag_tallies.end() ? 0 : failed->second) << "\n";
  return os.str();
}

void check_official_counts(const MetricsReport& report) {
  const std::pair<Scenario, std::size_t> expected[] = {
      {Scenario::ESS, 140}, {Scenario::GOS, 64}, {Scenario::RGS, 40}};
  for (const auto& [sc, n] : expected) {
    const std::size_t got = report.scenarios.at(sc).count;
    if (got != n) {
      throw Error(ErrorCode::ManifestParse, "official manifest expects " + std::to_string(n) +
                                                " " + std::string(to_string(sc)) + " samples, got " +
                                                std::to_string(got));
    }
  }
  if (report.overall.count != 244) {
    throw Error(ErrorCode::ManifestParse, "official manifest expects 244 samples, got " +
                                              std::to_string(report.overall.count));
  }
}

std::vector<AblationRow> ablation_rows(const ChainConfig& base) {
  auto with = [&](bool sm, bool rm) {
    ChainConfig c = base;
    c.enable_selection = sm;
    c.enable_refinement = rm;
    return AblationRow{true, sm, rm, c};
  };
  return {AblationRow{false, false, false, baseline_config(base)}, with(true, false),
          with(false, true), with(true, true)};
}

std::string format_ablation_table(std::span<const AblationRow> rows,
                                  std::span<const MetricsReport> reports) {
  constexpr std::size_t kCol = 9;
  std::ostringstream os;
  os << "GM  SM  RM  |" << pad("ESS", kCol, true) << pad("GOS", kCol, true)
     << pad("RGS", kCol, true) << pad("Overall", kCol, true) << "\n";
  os << "------------+" << std::string(4 * kCol, '-') << "\n";
  auto mark = [](bool on) { return on ? "on  " : "-   "; };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << mark(rows[i].generation) << mark(rows[i].selection) << mark(rows[i].refinement) << "|";
    for (Scenario sc : kScenarios) os << pad(fmt3(reports[i].scenarios.at(sc).giou), kCol, true);
    os << pad(fmt3(reports[i].overall.giou), kCol, true) << "\n";
  }
  return os.str();
}

json ablation_to_json(std::span<const AblationRow> rows, std::span<const MetricsReport> reports) {
  json arr = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    json giou = json::object();
    for (Scenario sc : kScenarios) {
      const auto& g = reports[i].scenarios.at(sc).giou;
      giou[std::string(to_string(sc))] = g ? json(*g) : json(nullptr);
    }
    giou["overall"] = *reports[i].overall.giou;
    arr.push_back({{"gm", rows[i].generation},
                   {"sm", rows[i].selection},
                   {"rm", rows[i].refinement},
                   {"giou", giou}});
  }
  return json{{"rows", arr}};
}

}  // namespace segagent
