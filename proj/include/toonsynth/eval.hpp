#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toonsynth/geometry.hpp"
#include "toonsynth/imaging/image.hpp"

namespace toonsynth {

struct Detection {
  std::int64_t image_id = 0;
  double score = 0.0;
  BoundingBox box;
  std::optional<BinaryMask> mask;
};

struct GroundTruth {
  std::int64_t image_id = 0;
  BoundingBox box;
  std::optional<BinaryMask> mask;
};

/// Band width in pixels: round(fraction * diagonal), at least 1.
int boundary_distance(int width, int height, double fraction = 0.02);

/// {p in mask : dist(p, complement) <= d}, with out-of-raster pixels counted
/// as complement.
BinaryMask boundary_band(const BinaryMask& mask, int d);

/// IoU of the two boundary bands. 1 when both bands are empty, 0 when only one is.
double boundary_iou(const BinaryMask& g, const BinaryMask& p, int d);
double boundary_iou(const BinaryMask& g, const BinaryMask& p);

/// Pixel IoU; 1 when both masks are empty.
double mask_iou(const BinaryMask& g, const BinaryMask& p);

/// 0.50, 0.55, ..., 0.95.
std::vector<double> coco_thresholds();

enum class IouKind { Box, Mask, Boundary };

std::string to_string(IouKind k);

struct MatchedPair {
  std::size_t detection;  // index into the caller's detection list
  std::size_t ground_truth;
  double iou;
};

struct ImageMatches {
  std::int64_t image_id = 0;
  std::size_t num_gt = 0;
  std::size_t num_det = 0;
  std::vector<MatchedPair> pairs;  // at the first threshold
};

struct ApResult {
  std::vector<double> thresholds;
  std::vector<double> per_threshold;
  double mean = 0.0;
  std::vector<ImageMatches> per_image;
};

/// Dense IoU matrix for one image, detections already in the order they are
/// to be matched (descending score).
struct ImageIous {
  std::int64_t image_id = 0;
  std::vector<std::size_t> det_index;  // caller's detection indices, matching order
  std::vector<double> scores;
  std::size_t num_gt = 0;
  std::vector<double> iou;  // det-major, scores.size() x num_gt
};

struct ApOptions {
  std::vector<double> thresholds = coco_thresholds();
  std::size_t max_detections = 100;
  int recall_points = 101;
};

/// COCO-style AP from precomputed matrices. Each detection, in order, takes
/// the unmatched ground truth with the highest IoU >= threshold (ties to the
/// lowest index). TP/FP flags are pooled over images and sorted by score
/// (stable, image order then rank); AP is the mean interpolated precision at
/// `recall_points` evenly spaced recalls. No ground truth gives AP 0.
ApResult average_precision(std::span<const ImageIous> images, const ApOptions& options = {});

using IouFn = std::function<double(const Detection&, const GroundTruth&)>;

/// Groups by image id, sorts each image's detections by descending score
/// (stable), keeps the top `max_detections` and scores them with `iou_fn`.
ApResult average_precision(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                           const IouFn& iou_fn, const ApOptions& options = {});

/// Same as above with a built-in IoU; boundary bands are computed once per mask.
ApResult average_precision(std::span<const Detection> dets, std::span<const GroundTruth> gts, IouKind kind,
                           const ApOptions& options = {});

struct EvalReport {
  ApResult box;
  std::optional<ApResult> mask;
  std::optional<ApResult> boundary;
};

/// Box AP always; Mask and Boundary AP when every record carries a mask.
EvalReport evaluate(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                    const ApOptions& options = {});

/// Report as a JSON string with "Box AP", "Mask AP", "Boundary AP" headline keys.
std::string eval_report_json(const EvalReport& report, const ApOptions& options = {});

}  // namespace toonsynth
