#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "toonsynth/chroma_key.hpp"
#include "toonsynth/geometry.hpp"
#include "toonsynth/imaging/image.hpp"
#include "toonsynth/imaging/warp.hpp"
#include "toonsynth/rng.hpp"

namespace toonsynth {

// ---------------------------------------------------------------------------
// Subject count

struct SubjectCountPolicy {
  double lambda = 2.5;
  int min_subjects = 1;
  int max_subjects = 12;
};

/// Poisson(lambda) conditioned on min_subjects <= N <= max_subjects by redrawing.
int sample_subject_count(RngStream& rng, const SubjectCountPolicy& policy = {});

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentPolicy {
  double flip_probability = 0.5;
  double warp_probability = 0.5;
  double grid_probability = 0.5;  // given a warp; otherwise rotation
  int grid_cells = 5;
  double grid_limit_lo = -0.3;
  double grid_limit_hi = 0.3;
  double max_rotation_deg = 30.0;
  double long_side_min = 0.15;  // fractions of the canvas side
  double long_side_max = 0.75;
  int canvas = 720;
};

enum class WarpKind { None, Grid, Rotation };

std::string to_string(WarpKind k);
WarpKind warp_kind_from_string(const std::string& s);

/// Everything needed to replay one augmentation without a random stream.
struct AugmentRecord {
  bool flip = false;
  WarpKind warp = WarpKind::None;
  double rotation_deg = 0.0;
  GridDistortion grid;
  int long_side = 0;

  bool operator==(const AugmentRecord&) const = default;
};

AugmentRecord draw_augment(RngStream& rng, const AugmentPolicy& policy = {});

/// flip -> (grid | rotation) -> crop to the alpha > 0.5 box -> resize long side.
/// The mask is re-derived from the warped alpha at threshold 0.5.
InstanceAsset apply_augment(const InstanceAsset& asset, const AugmentRecord& record);

struct AugmentedAsset {
  InstanceAsset asset;
  AugmentRecord record;
};

AugmentedAsset augment(const InstanceAsset& asset, RngStream& rng, const AugmentPolicy& policy = {});

// ---------------------------------------------------------------------------
// Background

struct BackgroundCrop {
  int resized_width = 0;
  int resized_height = 0;
  int x = 0;
  int y = 0;

  bool operator==(const BackgroundCrop&) const = default;
};

/// Smallest aspect-preserving size covering canvas x canvas, then a uniform crop offset.
BackgroundCrop draw_background_crop(int bg_width, int bg_height, int canvas, RngStream& rng);
ImageBuffer apply_background_crop(const ImageBuffer& bg, const BackgroundCrop& crop, int canvas);

struct CroppedBackground {
  ImageBuffer image;
  BackgroundCrop crop;
};

CroppedBackground crop_background(const ImageBuffer& bg, RngStream& rng, int canvas = 720);

// ---------------------------------------------------------------------------
// Placement

struct Size2 {
  int width = 0;
  int height = 0;
};

/// IoU bounds held as exact rationals num / 1e6 so window checks are integer.
struct IouWindow {
  static constexpr std::int64_t kDen = 1'000'000;
  std::int64_t lo_num = 150'000;
  std::int64_t hi_num = 800'000;

  static IouWindow from_doubles(double lo, double hi);
  /// lo <= inter / (area_sum - inter) <= hi, evaluated exactly.
  bool contains(std::int64_t inter, std::int64_t area_sum) const noexcept;
};

enum class SideBySideConstraint { Previous, AllPrior };

struct SideBySideParams {
  int canvas = 720;
  IouWindow window;
  SideBySideConstraint constraint = SideBySideConstraint::Previous;
  bool shuffle_order = true;
};

struct SideBySideResult {
  std::vector<std::size_t> order;   // placement order -> input index
  std::vector<BoundingBox> boxes;   // per placement step, integer pixel boxes
};

/// Places boxes one by one. The first lands uniformly inside the canvas; each
/// following one is drawn uniformly from the integer positions inside the
/// canvas whose IoU with the previous box (or every prior box) lies in the
/// window. Throws NoFeasiblePosition when a step has no candidate.
SideBySideResult side_by_side_boxes(std::span<const Size2> sizes, RngStream& rng,
                                    const SideBySideParams& params = {});

/// Greedy aspect matching: assets in input order each take the unassigned box
/// minimizing |log(asset aspect) - log(box aspect)|, ties to the lowest box
/// index. Returns the box index per asset. Throws InsufficientGuides.
std::vector<std::size_t> match_guide_boxes(std::span<const Size2> assets,
                                           std::span<const BoundingBox> guides);

/// Fits each asset inside its assigned guide box (aspect preserved, long side
/// capped at `long_side_cap`) and centers it there.
std::vector<BoundingBox> photo_guided_boxes(std::span<const Size2> assets,
                                            std::span<const BoundingBox> guides, int long_side_cap,
                                            std::vector<std::size_t>* assignment = nullptr);

enum class Strategy { PhotoGuided, SideBySide };
enum class HarmonizeMode { None, Quantize, HistogramMatch };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);
std::string to_string(HarmonizeMode m);
HarmonizeMode harmonize_mode_from_string(const std::string& s);

struct Placement {
  std::string asset_id;
  AugmentRecord transform;
  BoundingBox target_box;  // integer pixel rectangle on the canvas
  int z = 0;               // stacking order, unique
  std::optional<BoundingBox> guide_box;

  bool operator==(const Placement&) const = default;
};

/// Assets with their augmentation records -> placements.
std::vector<Placement> photo_guided_placement(std::span<const AugmentedAsset> assets,
                                              std::span<const BoundingBox> guide_boxes,
                                              int long_side_cap);
std::vector<Placement> side_by_side_placement(std::span<const AugmentedAsset> assets, RngStream& rng,
                                              const SideBySideParams& params = {});

// ---------------------------------------------------------------------------
// Layout and rasterization

struct HarmonizeRecord {
  HarmonizeMode mode = HarmonizeMode::None;
  int k = 0;                    // Quantize
  int reference_instance = -1;  // HistogramMatch, index into the emitted instances
  std::uint64_t seed = 0;       // Quantize k-means++ stream key

  bool operator==(const HarmonizeRecord&) const = default;
};

struct SceneLayout {
  int canvas = 720;
  std::string background_id;
  BackgroundCrop background_crop;
  std::vector<Placement> placements;
  Strategy strategy = Strategy::SideBySide;
  HarmonizeRecord harmonization;
  std::uint64_t master_seed = 0;
  std::uint64_t sample_index = 0;
  std::int64_t guide_photo = -1;
  int attempts = 1;
  bool strategy_fallback = false;

  bool operator==(const SceneLayout&) const = default;
};

struct AnnotatedInstance {
  BinaryMask modal_mask;
  BinaryMask amodal_mask;
  BoundingBox bbox;
  std::string asset_id;
};

struct AnnotatedSample {
  ImageBuffer image;
  std::vector<AnnotatedInstance> instances;
};

struct Background {
  std::string id;
  ImageBuffer image;
};

/// In-memory foreground and background pools, addressable by id.
class AssetPools {
 public:
  AssetPools() = default;
  AssetPools(std::vector<InstanceAsset> foregrounds, std::vector<Background> backgrounds);

  const std::vector<InstanceAsset>& foregrounds() const noexcept { return foregrounds_; }
  const std::vector<Background>& backgrounds() const noexcept { return backgrounds_; }
  const InstanceAsset& foreground(const std::string& id) const;
  const Background& background(const std::string& id) const;

 private:
  std::vector<InstanceAsset> foregrounds_;
  std::vector<Background> backgrounds_;
  std::unordered_map<std::string, std::size_t> fg_index_;
  std::unordered_map<std::string, std::size_t> bg_index_;
};

/// Alpha-over compositing in ascending z. Amodal masks are the placed alpha
/// > 0.5; modal masks subtract every higher-z amodal mask; fully occluded
/// instances are dropped. Samples are rounded to 8-bit levels.
/// `augmented`, when given, holds apply_augment results in placement order
/// and skips recomputing them.
AnnotatedSample rasterize(const SceneLayout& layout, const AssetPools& pools,
                          const std::vector<InstanceAsset>* augmented = nullptr);

}  // namespace toonsynth
