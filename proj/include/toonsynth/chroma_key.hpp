#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "toonsynth/imaging/image.hpp"

namespace toonsynth {

// ---------------------------------------------------------------------------
// Frame sampling

/// Indices floor(k * source_fps / target_hz) for k = 0, 1, ... below
/// `frame_count`, deduplicated and ascending.
std::vector<std::size_t> sample_frame_indices(std::size_t frame_count, double source_fps,
                                              double target_hz = 3.0);

std::vector<std::filesystem::path> sample_frames(const std::vector<std::filesystem::path>& frames,
                                                 double source_fps, double target_hz = 3.0);

// ---------------------------------------------------------------------------
// Keying-hue estimation

struct KeyingParams {
  int bins = 200;
  double half_window = 0.025;  // circular hue window is [H - w, H + w)
  float search_s_min = 0.95f;  // gate used to find the key
  float search_v_min = 0.95f;
  float extract_s_min = 0.90f;  // relaxed gate used to remove it
  float extract_v_min = 0.90f;
};

/// Gated hue histogram: counts of pixels with S >= s_min and V >= v_min,
/// binned by floor(H * bins).
struct HueHistogram {
  std::vector<std::uint64_t> counts;
  std::uint64_t total_pixels = 0;

  std::uint64_t gated() const noexcept;
};

HueHistogram hue_histogram(const ImageBuffer& rgb, const KeyingParams& params = {});

namespace serial {
HueHistogram hue_histogram(const ImageBuffer& rgb, const KeyingParams& params = {});
}  // namespace serial

struct KeyingEstimate {
  float hue_star = 0.0f;
  std::uint64_t support = 0;
  double coverage = 0.0;
  /// Start bin of the winning window (the window covers `window_bins` bins).
  int window_start_bin = 0;
};

/// Number of whole bins spanned by the circular window.
int window_bins(const KeyingParams& params);

/// Searches the `bins` candidate windows [b/bins - w, b/bins + w) for the
/// largest gated count (ties to the smallest hue), then refines hue_star to
/// the mean hue of the gated pixels inside the winning window, unwrapped
/// around the window so it stays correct across hue 0.
/// Throws ZeroSupport when no pixel passes the gate.
KeyingEstimate estimate_keying_hue(const ImageBuffer& rgb, const KeyingParams& params = {});

// ---------------------------------------------------------------------------
// Instance extraction

enum class AssetSource { ChromaKey, StillIllustration };

std::string to_string(AssetSource s);
AssetSource asset_source_from_string(const std::string& s);

struct AssetProvenance {
  std::string asset_id;
  AssetSource source = AssetSource::ChromaKey;
  int native_width = 0;
  int native_height = 0;
  std::string origin;  // source frame path, if any
  int crop_x = 0;      // offset of the crop inside the source frame
  int crop_y = 0;
};

/// Background-free subject: straight-alpha RGBA raster plus its binary mask.
struct InstanceAsset {
  ImageBuffer rgba;
  BinaryMask mask;
  AssetProvenance provenance;
};

/// Background predicate of the extraction step: hue inside the key window and
/// S, V above the relaxed gate.
bool is_key_pixel(float r, float g, float b, const KeyingEstimate& key, const KeyingParams& params);

/// Mask of non-key pixels over the whole frame (no cropping).
BinaryMask foreground_mask(const ImageBuffer& keyed_rgb, const KeyingEstimate& key,
                           const KeyingParams& params = {});

/// Keys `keyed_rgb` (usually the bilateral-prefiltered frame) and cuts the
/// subject out of `color_rgb` (usually the original frame), cropped to the
/// tight box of the mask. Throws EmptyForeground when nothing survives.
InstanceAsset extract_instance(const ImageBuffer& keyed_rgb, const KeyingEstimate& key,
                               const KeyingParams& params = {}, const ImageBuffer* color_rgb = nullptr);

/// Makes `mask` the asset's mask: alpha becomes 1 inside it and 0 outside, and
/// the asset is re-cropped to the new tight box. Throws EmptyForeground for an
/// empty mask.
InstanceAsset apply_mask(const InstanceAsset& asset, const BinaryMask& mask);

// ---------------------------------------------------------------------------
// Cleanup

/// Removes 8-connected true components smaller than `min_area`, then fills
/// 4-connected false components (not touching the border) smaller than
/// `min_area`. Idempotent.
BinaryMask despeckle(const BinaryMask& mask, std::size_t min_area);

/// Component labels (0 = background), ids in raster-scan order of first pixel.
struct Components {
  std::vector<int> labels;
  std::vector<std::size_t> areas;  // areas[id - 1]
  std::vector<bool> touches_border;
};

Components label_components(const BinaryMask& mask, bool value, bool eight_connected);

}  // namespace toonsynth
