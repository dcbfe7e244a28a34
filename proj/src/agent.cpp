#include "segagent/agent.hpp"

#include <chrono>
#include <future>
#include <stdexcept>

#include "segagent/codec.hpp"
#include "segagent/error.hpp"

namespace segagent {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct ViewOutcome {
  ViewRecord record;
  std::vector<CallRecord> calls;
  std::optional<SourcedBox> box;
  bool transport_failure = false;
};

ViewOutcome query_view(const Image& img, const std::string& instruction, const ChainConfig& cfg,
                       MllmBackend& mllm, int index) {
  const Augmentation& aug = cfg.augmentations[static_cast<std::size_t>(index)];
  ViewOutcome out;
  out.record.index = index;
  out.record.augmentation = aug.name();
  try {
    MllmRequest req;
    req.role = MllmRole::Generation;
    req.image = apply_augmentation(img, aug);
    req.instruction = instruction;
    req.prompt = render_generation_prompt(cfg.prompts, instruction);
    req.stage_index = index;
    req.view = aug;
    req.original_dims = img.dims();
    out.record.view_dims = req.image.dims();

    const MllmReply reply = mllm_query(mllm, cfg.mllm, req, &out.calls);
    const BBox view_box = std::get<BBox>(*reply.parsed);
    out.record.view_box = view_box;
    const BBox original = clamp_box(inverse_box(aug, view_box, img.dims()), img.dims());
    out.record.original_box = original;
    out.box = SourcedBox{original, index};
  } catch (const Error& e) {
    out.record.failure = e.what();
    out.transport_failure = e.code() == ErrorCode::Transport;
  }
  return out;
}

SomRecord som_record(std::string stage, int round, const std::vector<BBox>& boxes,
                     const Image& rendered) {
  return SomRecord{std::move(stage), round, boxes, rendered.dims(), sha256_hex(rendered.pixels())};
}

}  // namespace

void validate(const ChainConfig& cfg) {
  if (cfg.augmentations.empty()) throw Error(ErrorCode::Config, "augmentation list is empty");
  if (!(cfg.nms_iou_threshold > 0.0 && cfg.nms_iou_threshold <= 1.0)) {
    throw Error(ErrorCode::Config, "nms IoU threshold must lie in (0, 1]");
  }
  if (cfg.refinement_rounds < 0) throw Error(ErrorCode::Config, "refinement rounds must be >= 0");
  for (const Augmentation& a : cfg.augmentations) {
    if (a.kind() == AugmentationKind::Scale &&
        (a.factor() < Augmentation::kMinScale || a.factor() > Augmentation::kMaxScale)) {
      throw Error(ErrorCode::Config, "scale factor out of range");
    }
  }
  if (cfg.prompts.generation.empty() || cfg.prompts.selection.empty() ||
      cfg.prompts.refinement.empty()) {
    throw Error(ErrorCode::Config, "prompt templates must be non-empty");
  }
  validate(cfg.mllm);
  validate(cfg.segmenter);
  try {
    validate(cfg.mark_style);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, e.what());
  }
}

ChainConfig baseline_config(ChainConfig cfg) {
  cfg.augmentations = {Augmentation::identity()};
  cfg.enable_selection = false;
  cfg.enable_refinement = false;
  return cfg;
}

std::string_view to_string(Degradation d) {
  switch (d) {
    case Degradation::GenerationPartial: return "GenerationPartial";
    case Degradation::SelectionFellBack: return "SelectionFellBack";
    case Degradation::RefinementFellBack: return "RefinementFellBack";
  }
  return "Unknown";
}

std::vector<ScoredCandidate> run_generation(const Image& img, const std::string& instruction,
                                            const ChainConfig& cfg, MllmBackend& mllm,
                                            ChainRecorder* rec) {
  validate(cfg);
  if (instruction.empty()) throw Error(ErrorCode::InvalidArgument, "empty instruction");
  const int n = static_cast<int>(cfg.augmentations.size());

  std::vector<ViewOutcome> outcomes;
  outcomes.reserve(static_cast<std::size_t>(n));
  if (cfg.parallel_generation && n > 1) {
    std::vector<std::future<ViewOutcome>> futures;
    for (int i = 0; i < n; ++i) {
      futures.push_back(std::async(std::launch::async, query_view, std::cref(img),
                                   std::cref(instruction), std::cref(cfg), std::ref(mllm), i));
    }
    for (auto& f : futures) outcomes.push_back(f.get());
  } else {
    for (int i = 0; i < n; ++i) outcomes.push_back(query_view(img, instruction, cfg, mllm, i));
  }

  std::vector<SourcedBox> boxes;
  bool any_transport = false;
  std::string last_failure;
  for (auto& o : outcomes) {
    if (o.box) boxes.push_back(*o.box);
    any_transport = any_transport || o.transport_failure;
    if (!o.record.failure.empty()) last_failure = o.record.failure;
    if (rec) {
      rec->trace.views.push_back(o.record);
      rec->trace.calls.insert(rec->trace.calls.end(), o.calls.begin(), o.calls.end());
    }
  }

  if (boxes.empty()) {
    throw Error(any_transport ? ErrorCode::Transport : ErrorCode::AllCandidatesFailed,
                "no augmented view produced a usable box; last failure: " + last_failure);
  }
  auto scored = score_candidates(boxes);
  if (rec) {
    rec->trace.candidates = scored;
    if (boxes.size() < outcomes.size()) rec->flags.insert(Degradation::GenerationPartial);
  }
  return scored;
}

BBox run_selection(const Image& img, const std::string& instruction,
                   const std::vector<ScoredCandidate>& candidates, const ChainConfig& cfg,
                   MllmBackend& mllm, ChainRecorder* rec) {
  std::vector<SourcedBox> sourced;
  sourced.reserve(candidates.size());
  for (const auto& c : candidates) sourced.push_back(SourcedBox{c.box, c.source_index});
  const auto survivors = consensus_nms(sourced, cfg.nms_iou_threshold);

  std::vector<BBox> marks;
  for (const auto& s : survivors) marks.push_back(s.box);
  for (std::size_t i = 0; i < marks.size(); ++i) {
    for (std::size_t j = i + 1; j < marks.size(); ++j) {
      if (iou(marks[i], marks[j]) > cfg.nms_iou_threshold) {
        throw std::logic_error("NMS survivors overlap above the threshold");
      }
    }
  }

  auto finish = [&](const BBox& b) {
    if (rec) rec->trace.selected = b;
    return b;
  };
  if (rec) rec->trace.survivors = survivors;
  if (survivors.size() == 1 || !cfg.enable_selection) return finish(survivors.front().box);

  Image marked = render_som(img, marks, cfg.mark_style);
  if (rec) rec->trace.som.push_back(som_record("selection", 0, marks, marked));

  MllmRequest req;
  req.role = MllmRole::Selection;
  req.instruction = instruction;
  req.prompt = render_selection_prompt(cfg.prompts, instruction, marks);
  req.context = marks;
  req.original_dims = img.dims();
  req.image = marked;
  if (rec) rec->som_images.push_back(std::move(marked));

  try {
    const MllmReply reply = mllm_query(mllm, cfg.mllm, req, rec ? &rec->trace.calls : nullptr);
    const int choice = std::get<int>(*reply.parsed);
    if (rec) rec->trace.selected_mark = choice;
    return finish(marks[static_cast<std::size_t>(choice - 1)]);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ParseFailure && e.code() != ErrorCode::Transport) throw;
    if (rec) rec->flags.insert(Degradation::SelectionFellBack);
    return finish(survivors.front().box);
  }
}

BBox run_refinement(const Image& img, const std::string& instruction, const BBox& selected,
                    const ChainConfig& cfg, MllmBackend& mllm, ChainRecorder* rec) {
  BBox current = selected;
  auto finish = [&] {
    if (rec) rec->trace.refined = current;
    return current;
  };
  if (!cfg.enable_refinement) return finish();

  for (int round = 0; round < cfg.refinement_rounds; ++round) {
    const std::vector<BBox> marks{current};
    Image marked = render_som(img, marks, cfg.mark_style);
    if (rec) rec->trace.som.push_back(som_record("refinement", round, marks, marked));

    MllmRequest req;
    req.role = MllmRole::Refinement;
    req.instruction = instruction;
    req.prompt = render_refinement_prompt(cfg.prompts, instruction, current);
    req.context = marks;
    req.stage_index = round;
    req.original_dims = img.dims();
    req.image = marked;
    if (rec) rec->som_images.push_back(std::move(marked));

    try {
      const MllmReply reply = mllm_query(mllm, cfg.mllm, req, rec ? &rec->trace.calls : nullptr);
      current = std::get<BBox>(*reply.parsed);
      if (rec) rec->trace.refinement_steps.push_back(current);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ParseFailure && e.code() != ErrorCode::Transport) throw;
      if (rec) rec->flags.insert(Degradation::RefinementFellBack);
      break;
    }
  }
  return finish();
}

ChainResult run_chain(const Image& img, const std::string& instruction, const ChainConfig& cfg,
                      MllmBackend& mllm, Segmenter& segmenter, std::string_view sample_key) {
  ChainRecorder rec;
  rec.trace.instruction = instruction;
  rec.trace.image_dims = img.dims();

  auto timed = [&rec](const char* stage, auto&& fn) {
    const auto t0 = Clock::now();
    auto value = fn();
    rec.trace.stages.emplace_back(stage);
    rec.trace.timings.push_back(StageTiming{stage, seconds_since(t0)});
    return value;
  };

  const auto candidates =
      timed("generation", [&] { return run_generation(img, instruction, cfg, mllm, &rec); });
  const BBox selected = timed(
      "selection", [&] { return run_selection(img, instruction, candidates, cfg, mllm, &rec); });
  const BBox refined = timed(
      "refinement", [&] { return run_refinement(img, instruction, selected, cfg, mllm, &rec); });
  const BBox final_box = clamp_box(refined, img.dims());
  BinaryMask mask = timed("segmentation", [&] {
    return segment(segmenter, cfg.segmenter, img, final_box, sample_key);
  });
  rec.trace.mask = MaskRecord{mask.dims(), mask.count(), sha256_hex(mask.bits())};

  return ChainResult{final_box, std::move(mask), std::move(rec.trace), std::move(rec.flags),
                     std::move(rec.som_images)};
}

}  // namespace segagent
