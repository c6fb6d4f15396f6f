#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "toonsynth/chroma_key.hpp"
#include "toonsynth/compositor.hpp"
#include "toonsynth/harmonizer.hpp"
#include "toonsynth/loss.hpp"

namespace toonsynth {

enum class KeyMode { PerFrame, PerVideo };

struct ExtractConfig {
  int bilateral_diameter = 17;
  double bilateral_sigma = 80.0;
  double target_hz = 3.0;
  std::size_t min_area = 16;
  KeyMode key_mode = KeyMode::PerFrame;
  KeyingParams keying;
};

struct PoolPaths {
  std::filesystem::path foreground_manifest;
  std::filesystem::path backgrounds;
  std::filesystem::path guide_boxes;
};

struct RunConfig {
  std::uint64_t master_seed = 0;
  std::uint64_t sample_count = 1000;
  int canvas = 720;
  SubjectCountPolicy subjects;
  std::array<double, 2> strategy_weights{0.5, 0.5};  // photo_guided, side_by_side
  HarmonizePolicy harmonize;
  AugmentPolicy augment;
  double iou_min = 0.15;
  double iou_max = 0.8;
  SideBySideConstraint side_by_side_constraint = SideBySideConstraint::Previous;
  double guided_long_side_cap = 0.75;  // fraction of the canvas
  int max_attempts = 10;
  int workers = 0;  // 0: OpenMP default
  int batch_size = 16;
  PoolPaths pools;
  ExtractConfig extract;
  loss::LossDefaults loss;
  loss::AnchorGrid anchors;
};

/// Throws InvalidArgument naming the first offending field.
void validate(const RunConfig& config);

/// Every field, defaults included.
std::string run_config_to_json(const RunConfig& config);

/// Missing fields keep their defaults; unknown fields are rejected. Relative
/// pool paths are resolved against `base_dir`.
RunConfig run_config_from_json(const std::string& text, const std::filesystem::path& base_dir = {},
                               const std::string& origin = "<memory>");
RunConfig read_run_config(const std::filesystem::path& path);

std::string to_string(KeyMode m);
KeyMode key_mode_from_string(const std::string& s);

}  // namespace toonsynth
