#include "segagent/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <memory>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "segagent/agent.hpp"
#include "segagent/error.hpp"
#include "segagent/eval.hpp"
#include "segagent/http_backends.hpp"
#include "segagent/mock_backends.hpp"

namespace segagent {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string backend = "live";
  std::string mllm_url;
  std::string mllm_model;
  std::string seg_url;
  std::string aug = "identity,hflip,scale:1.25,scale:0.75";
  double nms_iou = 0.8;
  bool no_selection = false;
  bool no_refinement = false;
  int refine_rounds = 1;
  int workers = static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 8u));
  int retries = 2;
  double timeout = 60.0;
  double temperature = 0.0;
  bool debug = false;
  std::string out_dir = "seg-agent-out";

  // segment
  std::string image;
  std::string instruction;
  std::string sample_id = "cli";
  // evaluate / ablate
  std::string manifest;
  bool official = false;
  // render-som
  std::vector<std::string> boxes;
};

struct Backends {
  std::unique_ptr<MllmBackend> mllm;
  std::unique_ptr<Segmenter> segmenter;
  OracleSegmenter* unfilled_oracle = nullptr;
};

ChainConfig chain_config(const Options& o) {
  ChainConfig cfg;
  try {
    cfg.augmentations = parse_augmentation_list(o.aug);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  cfg.nms_iou_threshold = o.nms_iou;
  cfg.enable_selection = !o.no_selection;
  cfg.enable_refinement = !o.no_refinement;
  cfg.refinement_rounds = o.refine_rounds;

  BackendConfig mllm = mllm_config_from_env();
  if (!o.mllm_url.empty()) mllm.endpoint = o.mllm_url;
  if (!o.mllm_model.empty()) mllm.model = o.mllm_model;
  mllm.max_retries = o.retries;
  mllm.timeout_seconds = o.timeout;
  mllm.temperature = o.temperature;
  BackendConfig seg = segmenter_config_from_env();
  if (!o.seg_url.empty()) seg.endpoint = o.seg_url;
  seg.max_retries = o.retries;
  seg.timeout_seconds = o.timeout;
  cfg.mllm = mllm;
  cfg.segmenter = seg;
  if (o.workers < 1) throw Error(ErrorCode::Config, "--workers must be >= 1");
  validate(cfg);
  return cfg;
}

Backends make_backends(const Options& o, const ChainConfig& cfg) {
  Backends b;
  if (o.backend == "live") {
    // Endpoints are checked here so a bad setup fails before any request.
    parse_endpoint(cfg.mllm.endpoint);
    parse_endpoint(cfg.segmenter.endpoint);
    b.mllm = std::make_unique<HttpMllm>();
    b.segmenter = std::make_unique<HttpSegmenter>();
    return b;
  }
  if (o.backend.rfind("mock:", 0) == 0) {
    MockBackends m = load_mock_script(o.backend.substr(5));
    b.mllm = std::move(m.mllm);
    b.segmenter = std::move(m.segmenter);
    b.unfilled_oracle = m.unfilled_oracle;
    return b;
  }
  throw Error(ErrorCode::Config, "--backend must be 'live' or 'mock:PATH', got '" + o.backend + "'");
}

void fill_oracle_from_manifest(Backends& b, const std::vector<Sample>& samples) {
  if (!b.unfilled_oracle) return;
  for (const auto& s : samples) b.unfilled_oracle->add(s.id, load_mask(s.mask_path));
}

std::string safe_name(const std::string& id) {
  std::string s = id;
  for (char& c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  if (s.empty() || s == "." || s == "..") s = "_" + s;
  return s;
}

fs::path prepare_out_dir(const Options& o) {
  const fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Config, "cannot create output directory " + dir.string());
  return dir;
}

BBox parse_box_arg(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Config, "bad --box '" + text + "'");
    }
  }
  if (v.size() != 4) throw Error(ErrorCode::Config, "--box needs x1,y1,x2,y2");
  return BBox{std::min(v[0], v[2]), std::min(v[1], v[3]), std::max(v[0], v[2]),
              std::max(v[1], v[3])};
}

int cmd_segment(const Options& o, std::ostream& out) {
  const ChainConfig cfg = chain_config(o);
  const Image img = load_image(o.image);
  Backends b = make_backends(o, cfg);
  const fs::path dir = prepare_out_dir(o);

  const ChainResult r = run_chain(img, o.instruction, cfg, *b.mllm, *b.segmenter, o.sample_id);
  write_file(dir / "mask.png", mask_encode(r.mask));
  write_text(dir / "trace.json", trace_to_json(r.trace).dump(2) + "\n");
  write_text(dir / "timing.json", timings_to_json(r.trace).dump(2) + "\n");
  if (o.debug) {
    for (std::size_t k = 0; k < r.som_images.size(); ++k) {
      write_file(dir / ("som_" + std::to_string(k) + "_" + r.trace.som[k].stage + ".png"),
                 encode_png(r.som_images[k]));
    }
  }
  out << "box " << to_string(r.final_box) << "\n";
  out << "mask " << (dir / "mask.png").string() << " (" << r.mask.count() << " pixels)\n";
  for (Degradation d : r.flags) out << "flag " << to_string(d) << "\n";
  return kExitOk;
}

MetricsReport run_evaluation(const Options& o, const ChainConfig& cfg,
                             const std::vector<Sample>& samples, Backends& b,
                             const fs::path& trace_dir) {
  EvalOptions eo;
  eo.workers = static_cast<std::size_t>(o.workers);
  if (o.debug) {
    fs::create_directories(trace_dir);
    eo.on_result = [trace_dir](const Sample& s, const ChainResult& r) {
      write_text(trace_dir / (safe_name(s.id) + ".json"), trace_to_json(r.trace).dump(2) + "\n");
    };
  }
  return evaluate(samples, cfg, *b.mllm, *b.segmenter, eo);
}

int cmd_evaluate(const Options& o, std::ostream& out) {
  const ChainConfig cfg = chain_config(o);
  const auto samples = load_manifest(o.manifest);
  Backends b = make_backends(o, cfg);
  fill_oracle_from_manifest(b, samples);
  const fs::path dir = prepare_out_dir(o);

  const MetricsReport report = run_evaluation(o, cfg, samples, b, dir / "traces");
  const std::string table = format_report_table(report);
  write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_text(dir / "report.txt", table);
  out << table;
  if (o.official) check_official_counts(report);
  return kExitOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  const ChainConfig cfg = chain_config(o);
  const auto samples = load_manifest(o.manifest);
  Backends b = make_backends(o, cfg);
  fill_oracle_from_manifest(b, samples);
  const fs::path dir = prepare_out_dir(o);

  const auto rows = ablation_rows(cfg);
  std::vector<MetricsReport> reports;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    reports.push_back(run_evaluation(o, rows[i].config, samples, b,
                                     dir / ("traces_row" + std::to_string(i))));
  }
  const std::string table = format_ablation_table(rows, reports);
  json j = ablation_to_json(rows, reports);
  for (std::size_t i = 0; i < reports.size(); ++i) j["rows"][i]["report"] = report_to_json(reports[i]);
  write_text(dir / "ablation.json", j.dump(2) + "\n");
  write_text(dir / "ablation.txt", table);
  out << table;
  return kExitOk;
}

int cmd_render_som(const Options& o, std::ostream& out) {
  const Image img = load_image(o.image);
  std::vector<BBox> boxes;
  for (const auto& text : o.boxes) boxes.push_back(clamp_box(parse_box_arg(text), img.dims()));
  const fs::path dir = prepare_out_dir(o);
  write_file(dir / "som.png", encode_png(render_som(img, boxes)));
  out << "wrote " << (dir / "som.png").string() << " with " << boxes.size() << " marks\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Training-free language-guided segmentation with a generate/select/refine chain",
               "seg-agent"};
  app.set_config("--config", "", "TOML file of option defaults (key = value)");
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--backend", o.backend, "'live' or 'mock:PATH' (scripted JSON)");
  app.add_option("--mllm-url", o.mllm_url, "chat-completions endpoint (env SEG_AGENT_MLLM_URL)");
  app.add_option("--mllm-model", o.mllm_model, "model id (env SEG_AGENT_MLLM_MODEL)");
  app.add_option("--seg-url", o.seg_url, "segmenter endpoint (env SEG_AGENT_SEG_URL)");
  app.add_option("--aug", o.aug, "augmentations: identity,hflip,scale:F,...");
  app.add_option("--nms-iou", o.nms_iou, "NMS IoU threshold");
  app.add_flag("--no-selection", o.no_selection, "skip the Set-of-Mark selection query");
  app.add_flag("--no-refinement", o.no_refinement, "skip refinement");
  app.add_option("--refine-rounds", o.refine_rounds, "refinement rounds");
  app.add_option("--workers", o.workers, "parallel samples for evaluate/ablate");
  app.add_option("--retries", o.retries, "re-asks per query after an unparseable reply");
  app.add_option("--timeout", o.timeout, "per-request timeout in seconds");
  app.add_option("--temperature", o.temperature, "sampling temperature");
  app.add_flag("--debug", o.debug, "write Set-of-Mark renders and per-sample traces");
  app.add_option("--out", o.out_dir, "output directory");

  auto* segment = app.add_subcommand("segment", "segment one image from an instruction");
  segment->add_option("image", o.image, "RGB image (PNG or JPEG)")->required();
  segment->add_option("instruction", o.instruction, "what to segment")->required();
  segment->add_option("--id", o.sample_id, "sample key passed to the segmenter");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a JSON-lines manifest");
  evaluate_cmd->add_option("manifest", o.manifest, "manifest path")->required();
  evaluate_cmd->add_flag("--official", o.official, "require the 140/64/40 scenario split");

  auto* render = app.add_subcommand("render-som", "draw numbered marks on an image");
  render->add_option("image", o.image, "RGB image (PNG or JPEG)")->required();
  render->add_option("--box", o.boxes, "x1,y1,x2,y2 (repeatable)");

  auto* ablate = app.add_subcommand("ablate", "run the four module-ablation configurations");
  ablate->add_option("manifest", o.manifest, "manifest path")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitHarnessError;
  }

  try {
    if (segment->parsed()) return cmd_segment(o, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(o, out);
    if (render->parsed()) return cmd_render_som(o, out);
    if (ablate->parsed()) return cmd_ablate(o, out);
  } catch (const Error& e) {
    err << "seg-agent: " << e.what() << "\n";
    return e.code() == ErrorCode::AllCandidatesFailed ? kExitChainFailed : kExitHarnessError;
  } catch (const std::exception& e) {
    err << "seg-agent: " << e.what() << "\n";
    return kExitHarnessError;
  }
  return kExitHarnessError;
}

}  // namespace segagent
