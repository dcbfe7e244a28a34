#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace segagent {

struct ImageDims {
  int width = 0;
  int height = 0;

  bool operator==(const ImageDims&) const = default;
};

void validate(const ImageDims& dims);

/// Axis-aligned box in absolute pixel coordinates covering the half-open
/// region [x1, x2) x [y1, y2). Constructed through make_box() when the
/// invariants (finite, x1 < x2, y1 < y2) need checking.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }

  bool operator==(const BBox&) const = default;
};

/// Throws Error(DegenerateBox) unless the coordinates are finite with
/// x1 < x2 and y1 < y2.
BBox make_box(double x1, double y1, double x2, double y2);
bool is_valid(const BBox& b);
std::string to_string(const BBox& b);

double iou(const BBox& a, const BBox& b);

/// Clips to [0, W] x [0, H]. Throws Error(DegenerateBox) when the clipped
/// width or height drops below one pixel.
BBox clamp_box(const BBox& b, const ImageDims& dims);

enum class AugmentationKind { Identity, HorizontalFlip, Scale };

/// An invertible image-space transform. Scale factors are restricted to
/// [kMinScale, kMaxScale].
class Augmentation {
 public:
  static constexpr double kMinScale = 0.25;
  static constexpr double kMaxScale = 4.0;

  static Augmentation identity() { return Augmentation(AugmentationKind::Identity, 1.0); }
  static Augmentation horizontal_flip() { return Augmentation(AugmentationKind::HorizontalFlip, 1.0); }
  static Augmentation scale(double factor);

  /// Parses "identity", "hflip" or "scale:<factor>".
  static Augmentation parse(const std::string& text);

  AugmentationKind kind() const { return kind_; }
  double factor() const { return factor_; }
  std::string name() const;

  bool operator==(const Augmentation&) const = default;

 private:
  Augmentation(AugmentationKind kind, double factor) : kind_(kind), factor_(factor) {}

  AugmentationKind kind_;
  double factor_;
};

/// Identity, HorizontalFlip, Scale(1.25), Scale(0.75).
std::vector<Augmentation> default_augmentations();
std::vector<Augmentation> parse_augmentation_list(const std::string& csv);

/// Maps a box from the pre-transform frame (dims) into the augmented frame.
BBox forward_box(const Augmentation& aug, const BBox& b, const ImageDims& dims);
/// Maps a box from the augmented frame back into the original frame.
BBox inverse_box(const Augmentation& aug, const BBox& b, const ImageDims& original_dims);
/// Pixel dimensions of the augmented image.
ImageDims augmented_dims(const Augmentation& aug, const ImageDims& dims);

struct SourcedBox {
  BBox box;
  int source_index = 0;
};

struct ScoredCandidate {
  BBox box;
  int source_index = 0;
  double consensus = 0.0;

  bool operator==(const ScoredCandidate&) const = default;
};

/// Consensus score of each box: sum of its IoU with every other box, summed
/// in input order.
std::vector<ScoredCandidate> score_candidates(std::span<const SourcedBox> boxes);

/// Greedy NMS ordered by consensus (descending), ties broken by lower
/// source_index then input position. A candidate is dropped when its IoU
/// with any kept candidate exceeds iou_threshold. Output is in keep order.
std::vector<ScoredCandidate> consensus_nms(std::span<const SourcedBox> candidates,
                                           double iou_threshold);

}  // namespace segagent
