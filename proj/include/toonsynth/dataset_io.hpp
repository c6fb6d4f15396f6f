#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "toonsynth/chroma_key.hpp"
#include "toonsynth/compositor.hpp"
#include "toonsynth/eval.hpp"
#include "toonsynth/geometry.hpp"
#include "toonsynth/imaging/image.hpp"

namespace toonsynth {

// ---------------------------------------------------------------------------
// RLE

/// COCO uncompressed RLE: column-major runs starting with a (possibly empty)
/// run of zeros.
struct RleMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint64_t> counts;

  bool operator==(const RleMask&) const = default;
};

RleMask rle_encode(const BinaryMask& mask);
/// Throws FormatError when the runs do not sum to height * width.
BinaryMask rle_decode(const RleMask& rle);
std::uint64_t rle_area(const RleMask& rle);

// ---------------------------------------------------------------------------
// Pools

struct PoolEntry {
  std::string asset_id;
  std::string rgba_path;  // relative to the manifest's directory unless absolute
  std::string mask_path;
  AssetSource source = AssetSource::ChromaKey;
  int native_width = 0;
  int native_height = 0;
  std::string origin;

  bool operator==(const PoolEntry&) const = default;
};

struct PoolManifest {
  std::vector<PoolEntry> entries;
};

PoolManifest read_pool_manifest(const std::filesystem::path& path);
void write_pool_manifest(const std::filesystem::path& path, const PoolManifest& manifest);

/// Loads every asset of a manifest. The alpha channel is forced to the stored
/// mask so the two always agree.
std::vector<InstanceAsset> load_foreground_pool(const std::filesystem::path& manifest_path);

/// A directory of PNG files (ids are file stems, sorted) or a JSON manifest
/// {"backgrounds": [{"id": ..., "path": ...}]}.
std::vector<Background> load_backgrounds(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Guide boxes

struct GuidePhoto {
  std::string id;
  int width = 0;
  int height = 0;
  std::vector<BoundingBox> boxes;  // source-photo pixels
};

struct GuideBundle {
  std::vector<GuidePhoto> photos;
};

GuideBundle load_guide_boxes(const std::filesystem::path& path);
GuideBundle parse_guide_boxes(const std::string& json_text);

/// Uniform scale by canvas / max(width, height), centered on the canvas.
std::vector<BoundingBox> scale_guide_boxes(const GuidePhoto& photo, int canvas);

/// Indices of photos holding at least `n` boxes.
std::vector<std::size_t> eligible_photos(const GuideBundle& bundle, std::size_t n);

// ---------------------------------------------------------------------------
// COCO documents

struct CocoImage {
  std::int64_t id = 0;
  std::string file_name;
  int width = 0;
  int height = 0;
};

struct CocoAnnotation {
  std::int64_t id = 0;
  std::int64_t image_id = 0;
  int category_id = 1;
  std::array<double, 4> bbox{};  // x, y, w, h
  RleMask segmentation;
  std::uint64_t area = 0;
  std::optional<RleMask> amodal;  // stored under "extra"
  std::optional<std::string> asset_id;
  std::optional<double> score;  // predictions only
};

struct CocoDocument {
  std::vector<CocoImage> images;
  std::vector<CocoAnnotation> annotations;
};

std::string coco_to_json(const CocoDocument& doc);
CocoDocument coco_from_json(const std::string& text, const std::string& origin = "<memory>");
CocoDocument read_coco(const std::filesystem::path& path);

/// Annotation records of one sample; bbox = tight box of the modal mask.
std::vector<CocoAnnotation> annotate(const AnnotatedSample& sample, std::int64_t image_id,
                                     std::int64_t first_annotation_id);

/// Ground truth and predictions for the evaluator. Prediction documents may
/// omit "images"; their image ids must then all appear in the ground truth.
/// Every id mismatch is listed in the thrown FormatError.
std::vector<GroundTruth> ground_truth_from_coco(const CocoDocument& gt);
std::vector<Detection> detections_from_coco(const CocoDocument& pred, const CocoDocument& gt);

/// A bare COCO results array ([{image_id, bbox, segmentation, score}]) or a
/// full document with scored annotations.
CocoDocument read_predictions(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Layouts and datasets

std::string layout_to_json(const SceneLayout& layout);
SceneLayout layout_from_json(const std::string& text, const std::string& origin = "<memory>");
SceneLayout read_layout(const std::filesystem::path& path);

std::string image_file_name(std::uint64_t sample_index);
std::string layout_file_name(std::uint64_t sample_index);

/// Single writer for one output directory: images/NNNNNN.png,
/// layouts/NNNNNN.json and, on finish(), annotations.json. Samples may arrive
/// in any order; the document is sorted by sample index.
class DatasetWriter {
 public:
  explicit DatasetWriter(std::filesystem::path dir);

  void add(const AnnotatedSample& sample, const SceneLayout& layout);
  CocoDocument finish();

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  struct Pending {
    std::uint64_t index;
    CocoImage image;
    std::vector<CocoAnnotation> annotations;
  };
  std::filesystem::path dir_;
  std::vector<Pending> pending_;
};

struct StoredSample {
  AnnotatedSample sample;
  std::optional<SceneLayout> layout;
};

CocoDocument write_dataset(const std::vector<std::pair<AnnotatedSample, SceneLayout>>& samples,
                           const std::filesystem::path& dir);
std::vector<StoredSample> read_dataset(const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace toonsynth
