#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "toonsynth/compositor.hpp"
#include "toonsynth/imaging/image.hpp"
#include "toonsynth/rng.hpp"

namespace toonsynth {

using Rgb = std::array<double, 3>;

struct KMeansParams {
  int max_iterations = 50;
  double tolerance = 1e-4;  // stop once no center moves farther than this
};

struct Palette {
  int k = 0;
  std::vector<Rgb> centers;  // may hold fewer than k when the input has fewer distinct colors
  double objective = 0.0;    // weighted sum of squared distances, final assignment
  std::vector<double> objective_history;  // one entry per Lloyd iteration
  int iterations = 0;
};

/// Weighted Lloyd iterations with k-means++ seeding. Nearest-center ties go to
/// the lowest center index. Assignment runs over OpenMP threads and sums are
/// accumulated serially, so the result does not depend on the thread count.
Palette kmeans(std::span<const Rgb> points, std::span<const double> weights, int k, RngStream& rng,
               const KMeansParams& params = {});

namespace serial {
Palette kmeans(std::span<const Rgb> points, std::span<const double> weights, int k, RngStream& rng,
               const KMeansParams& params = {});
}  // namespace serial

struct QuantizeResult {
  ImageBuffer image;
  Palette palette;
};

/// Clusters the distinct 8-bit colors of `img` (weighted by pixel count) and
/// replaces every pixel by its cluster center.
QuantizeResult quantize_colors(const ImageBuffer& img, int k, RngStream& rng, const KMeansParams& params = {});

/// Per-channel 256-level histograms, optionally restricted to a mask.
struct ChannelHistograms {
  std::array<std::array<std::uint64_t, 256>, 3> counts{};
  std::uint64_t total = 0;
};

ChannelHistograms channel_histograms(const ImageBuffer& img, const BinaryMask* region = nullptr);

using LevelLut = std::array<std::array<std::uint8_t, 256>, 3>;

/// out = F_ref^-1(F_src(v)) with the nearest-rank inverse (smallest level w
/// with F_ref(w) >= F_src(v)), computed with exact integer comparisons.
LevelLut matching_lut(const ChannelHistograms& src, const ChannelHistograms& ref);

ImageBuffer histogram_match(const ImageBuffer& src, const ImageBuffer& ref);

/// Remaps the pixels of `region` in place so their histogram follows `ref`.
void histogram_match_region(ImageBuffer& img, const BinaryMask& region, const ChannelHistograms& ref);

struct HarmonizePolicy {
  std::array<double, 3> mode_weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};  // none, quantize, histogram
  std::vector<int> k_choices{12, 16, 32};
  KMeansParams kmeans;
};

HarmonizeRecord draw_harmonization(RngStream& rng, std::size_t instance_count, const HarmonizePolicy& policy = {});

/// Applies a recorded harmonization. Masks and boxes are never touched.
/// HistogramMatch matches every other instance region and the background
/// (pixels outside all modal masks) to the reference instance's region.
AnnotatedSample harmonize_sample(const AnnotatedSample& sample, const HarmonizeRecord& record,
                                 const KMeansParams& params = {});

}  // namespace toonsynth
