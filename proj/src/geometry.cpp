#include "segagent/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "segagent/error.hpp"

namespace segagent {

void validate(const ImageDims& dims) {
  if (dims.width < 1 || dims.height < 1) {
    throw Error(ErrorCode::InvalidArgument, "image dims must be positive, got " +
                                                std::to_string(dims.width) + "x" +
                                                std::to_string(dims.height));
  }
}

bool is_valid(const BBox& b) {
  return std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) &&
         std::isfinite(b.y2) && b.x1 < b.x2 && b.y1 < b.y2;
}

BBox make_box(double x1, double y1, double x2, double y2) {
  BBox b{x1, y1, x2, y2};
  if (!is_valid(b)) throw Error(ErrorCode::DegenerateBox, to_string(b));
  return b;
}

std::string to_string(const BBox& b) {
  std::ostringstream os;
  os << '[' << b.x1 << ',' << b.y1 << ',' << b.x2 << ',' << b.y2 << ']';
  return os.str();
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

BBox clamp_box(const BBox& b, const ImageDims& dims) {
  if (!std::isfinite(b.x1) || !std::isfinite(b.y1) || !std::isfinite(b.x2) ||
      !std::isfinite(b.y2)) {
    throw Error(ErrorCode::DegenerateBox, "non-finite box " + to_string(b));
  }
  const double w = dims.width;
  const double h = dims.height;
  BBox c{std::clamp(b.x1, 0.0, w), std::clamp(b.y1, 0.0, h), std::clamp(b.x2, 0.0, w),
         std::clamp(b.y2, 0.0, h)};
  if (c.width() < 1.0 || c.height() < 1.0) {
    throw Error(ErrorCode::DegenerateBox,
                to_string(b) + " collapses inside " + std::to_string(dims.width) + "x" +
                    std::to_string(dims.height));
  }
  return c;
}

Augmentation Augmentation::scale(double factor) {
  if (!std::isfinite(factor) || factor < kMinScale || factor > kMaxScale) {
    std::ostringstream os;
    os << "scale factor " << factor << " outside [" << kMinScale << ", " << kMaxScale << "]";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  return Augmentation(AugmentationKind::Scale, factor);
}

Augmentation Augmentation::parse(const std::string& text) {
  if (text == "identity") return identity();
  if (text == "hflip") return horizontal_flip();
  if (text.rfind("scale:", 0) == 0) {
    const std::string arg = text.substr(6);
    std::size_t used = 0;
    double f = 0.0;
    try {
      f = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != arg.size()) {
      throw Error(ErrorCode::InvalidArgument, "bad scale factor in '" + text + "'");
    }
    return scale(f);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown augmentation '" + text + "'");
}

std::string Augmentation::name() const {
  switch (kind_) {
    case AugmentationKind::Identity: return "identity";
    case AugmentationKind::HorizontalFlip: return "hflip";
    case AugmentationKind::Scale: {
      std::ostringstream os;
      os << "scale:" << factor_;
      return os.str();
    }
  }
  return "unknown";
}

std::vector<Augmentation> default_augmentations() {
  return {Augmentation::identity(), Augmentation::horizontal_flip(), Augmentation::scale(1.25),
          Augmentation::scale(0.75)};
}

std::vector<Augmentation> parse_augmentation_list(const std::string& csv) {
  std::vector<Augmentation> out;
  std::istringstream is(csv);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (item.empty()) continue;
    out.push_back(Augmentation::parse(item));
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "augmentation list is empty");
  return out;
}

BBox forward_box(const Augmentation& aug, const BBox& b, const ImageDims& dims) {
  switch (aug.kind()) {
    case AugmentationKind::Identity: return b;
    case AugmentationKind::HorizontalFlip: {
      const double w = dims.width;
      return BBox{w - b.x2, b.y1, w - b.x1, b.y2};
    }
    case AugmentationKind::Scale: {
      const double f = aug.factor();
      return BBox{b.x1 * f, b.y1 * f, b.x2 * f, b.y2 * f};
    }
  }
  return b;
}

BBox inverse_box(const Augmentation& aug, const BBox& b, const ImageDims& original_dims) {
  switch (aug.kind()) {
    case AugmentationKind::Identity: return b;
    case AugmentationKind::HorizontalFlip: {
      const double w = original_dims.width;
      return BBox{w - b.x2, b.y1, w - b.x1, b.y2};
    }
    case AugmentationKind::Scale: {
      const double f = aug.factor();
      return BBox{b.x1 / f, b.y1 / f, b.x2 / f, b.y2 / f};
    }
  }
  return b;
}

ImageDims augmented_dims(const Augmentation& aug, const ImageDims& dims) {
  if (aug.kind() != AugmentationKind::Scale) return dims;
  return ImageDims{static_cast<int>(std::lround(dims.width * aug.factor())),
                   static_cast<int>(std::lround(dims.height * aug.factor()))};
}

std::vector<ScoredCandidate> score_candidates(std::span<const SourcedBox> boxes) {
  std::vector<ScoredCandidate> out;
  out.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < boxes.size(); ++j) {
      if (j != i) sum += iou(boxes[i].box, boxes[j].box);
    }
    out.push_back(ScoredCandidate{boxes[i].box, boxes[i].source_index, sum});
  }
  return out;
}

std::vector<ScoredCandidate> consensus_nms(std::span<const SourcedBox> candidates,
                                           double iou_threshold) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyCandidates, "no candidate boxes");
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "iou threshold must lie in (0, 1]");
  }
  const auto scored = score_candidates(candidates);
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scored[a].consensus != scored[b].consensus) return scored[a].consensus > scored[b].consensus;
    return scored[a].source_index < scored[b].source_index;
  });

  std::vector<ScoredCandidate> kept;
  for (std::size_t idx : order) {
    const auto& cand = scored[idx];
    const bool redundant = std::any_of(kept.begin(), kept.end(), [&](const ScoredCandidate& k) {
      return iou(k.box, cand.box) > iou_threshold;
    });
    if (!redundant) kept.push_back(cand);
  }
  return kept;
}

}  // namespace segagent
