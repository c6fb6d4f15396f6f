#pragma once

#include <vector>

#include "toonsynth/imaging/image.hpp"
#include "toonsynth/rng.hpp"

namespace toonsynth {

// All resampling is bilinear with half-pixel centers. RGBA rasters are
// interpolated in premultiplied-alpha space so transparent texels never bleed
// color into the subject.

ImageBuffer resize_bilinear(const ImageBuffer& img, int new_width, int new_height);

/// Aspect-preserving resize so that max(width, height) == target.
ImageBuffer resize_long_side(const ImageBuffer& img, int target);

ImageBuffer flip_horizontal(const ImageBuffer& img);

/// Rotates an RGBA asset about its center (positive = counter-clockwise on
/// screen). The canvas grows to hold the rotated bounds; uncovered pixels are
/// fully transparent. Multiples of 90 degrees resample exactly.
ImageBuffer warp_rotate(const ImageBuffer& rgba, double degrees);

/// Per-axis step scales of a grid distortion: cell k of the source, one
/// `1/cells` slice of the axis, is stretched by `x_scales[k]` (resp. y).
struct GridDistortion {
  int cells = 5;
  std::vector<double> x_scales;
  std::vector<double> y_scales;

  bool operator==(const GridDistortion&) const = default;
};

/// Draws `cells` scales per axis, each 1 + u with u ~ U(lo, hi).
/// lo > hi is rejected; lo == hi is a degenerate (fixed) draw.
GridDistortion draw_grid_distortion(int cells, double lo, double hi, RngStream& rng);

/// Piecewise-linear warp. The output axis is the sum of stretched cells, so no
/// content is cropped; alpha is warped with color.
ImageBuffer warp_grid_distort(const ImageBuffer& rgba, const GridDistortion& grid);

inline ImageBuffer warp_grid_distort(const ImageBuffer& rgba, int cells, double lo, double hi,
                                     RngStream& rng) {
  return warp_grid_distort(rgba, draw_grid_distortion(cells, lo, hi, rng));
}

}  // namespace toonsynth
