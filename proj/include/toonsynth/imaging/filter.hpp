#pragma once

#include "toonsynth/imaging/image.hpp"

namespace toonsynth {

/// Edge-preserving smoothing over a square `diameter` x `diameter` window.
/// One sigma drives both kernels: spatial in pixels, range in 0-255 units of
/// Euclidean color distance. Out-of-image taps are skipped (weights
/// renormalized), so constant images are fixed points.
///
/// Rows are distributed over OpenMP threads; the result is bit-identical to
/// `serial::bilateral_filter` for any thread count.
ImageBuffer bilateral_filter(const ImageBuffer& img, int diameter, double sigma);

namespace serial {
ImageBuffer bilateral_filter(const ImageBuffer& img, int diameter, double sigma);
}  // namespace serial

}  // namespace toonsynth
