#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "toonsynth/geometry.hpp"
#include "toonsynth/imaging/distance.hpp"
#include "toonsynth/imaging/image.hpp"
#include "toonsynth/loss.hpp"
#include "toonsynth/rng.hpp"

// Deliberately naive reference implementations. They share no code with the
// kernels they check beyond the basic containers.
namespace toonsynth::oracle {

/// O(n^2) nearest-complement scan, squared distances.
std::vector<std::int64_t> distance_sq(const BinaryMask& mask, Border border);

/// {p in mask : min squared distance to a false or out-of-raster pixel <= d^2}.
BinaryMask boundary_band(const BinaryMask& mask, int d);

struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 0;
};

/// Boundary IoU as an integer ratio; den == 0 means both bands are empty.
Ratio boundary_iou(const BinaryMask& g, const BinaryMask& p, int d);
Ratio mask_iou(const BinaryMask& g, const BinaryMask& p);

/// Areas by counting unit pixels; boxes must have integer corners.
double raster_giou(const BoundingBox& a, const BoundingBox& b);

double qfl_scalar(double y, double sigma, double beta, double eps = 1e-7);

/// Direct per-pixel PPA of one level whose prediction is already at gt size.
double ppa_literal(const std::vector<double>& p, const std::vector<double>& g, int h, int w, int pool = 31,
                   double gain = 5.0, double eps = 1e-7);

/// Best assignment by brute force: the lexicographically smallest
/// (cost_1, box_1, cost_2, box_2, ...) over all injective maps assets -> boxes.
std::vector<std::size_t> guided_assignment(std::span<const double> asset_aspects,
                                           std::span<const double> box_aspects);

/// Full cost table, then per-gt (descending area, stable) argmin over the
/// unassigned candidates.
std::vector<std::size_t> greedy_assignment(std::span<const BoundingBox> decoded, std::span<const BoundingBox> gts,
                                           double input_size, double center_weight);

/// Smallest weighted SSE over all 2-partitions of a small point set.
double best_two_partition_sse(std::span<const std::array<double, 3>> points);

/// Central differences of f along coordinate i of x.
double central_difference(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                          std::size_t i, double h = 1e-4);

/// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

BinaryMask random_mask(RngStream& rng, int w, int h, double density);

/// Random masks made of a few rectangles and discs, so bands are non-trivial.
BinaryMask random_shape_mask(RngStream& rng, int w, int h);

}  // namespace toonsynth::oracle
