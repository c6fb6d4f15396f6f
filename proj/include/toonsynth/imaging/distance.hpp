#pragma once

#include <vector>

#include "toonsynth/imaging/image.hpp"

namespace toonsynth {

enum class Border {
  /// Only in-image false pixels count as complement.
  Ignore,
  /// Pixels outside the raster count as complement (a one-pixel false frame).
  Exterior,
};

/// Exact squared Euclidean distance from every true pixel to the nearest
/// complement pixel; 0 on complement pixels. Values are exact integers stored
/// as doubles; +inf where no complement exists. Separable lower-envelope
/// transform, columns then rows, each pass parallel over OpenMP threads.
std::vector<double> squared_distance_to_complement(const BinaryMask& mask,
                                                   Border border = Border::Ignore);

/// sqrt of `squared_distance_to_complement`.
std::vector<double> distance_to_complement(const BinaryMask& mask, Border border = Border::Ignore);

namespace serial {
std::vector<double> squared_distance_to_complement(const BinaryMask& mask,
                                                   Border border = Border::Ignore);
}  // namespace serial

}  // namespace toonsynth
