#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "toonsynth/compositor.hpp"
#include "toonsynth/config.hpp"
#include "toonsynth/dataset_io.hpp"

namespace toonsynth {

struct SynthesisInputs {
  AssetPools pools;
  GuideBundle guides;
};

/// Loads the pools and guide bundle named in the config.
SynthesisInputs load_inputs(const RunConfig& config);

struct SynthesizedSample {
  AnnotatedSample sample;
  SceneLayout layout;
};

/// One sample as a pure function of (inputs, config, index). Infeasible
/// placements are retried with fresh augmentations up to max_attempts times,
/// then the other strategy gets the same budget. Throws the last placement
/// error when both fail.
SynthesizedSample synthesize_sample(std::uint64_t index, const RunConfig& config, const SynthesisInputs& inputs);

/// Rebuilds a sample from its layout alone.
AnnotatedSample replay_layout(const SceneLayout& layout, const AssetPools& pools, const KMeansParams& kmeans = {});

struct SynthesisFailure {
  std::uint64_t index = 0;
  std::string kind;
  std::string message;
};

struct SynthesisSummary {
  std::size_t written = 0;
  std::vector<SynthesisFailure> failures;
};

/// Batched parallel map over sample indices with a single writer. With
/// preview > 0 also writes preview.png, a contact sheet of the first samples.
SynthesisSummary run_synthesis(const RunConfig& config, const SynthesisInputs& inputs,
                               const std::filesystem::path& out_dir, int preview = 0);

/// Square grid of thumbnails with translucent modal-mask overlays.
ImageBuffer contact_sheet(std::span<const AnnotatedSample> samples, int tile = 240);

struct FrameReport {
  std::filesystem::path frame;
  std::string status;  // "ok" or an error kind
  std::string message;
  double coverage = 0.0;
  double hue = 0.0;
  std::string asset_id;
};

struct ExtractionSummary {
  std::size_t frames_found = 0;
  std::vector<FrameReport> frames;  // one per sampled frame
  std::size_t added = 0;
  std::filesystem::path manifest;
};

/// frames -> 3 Hz sampling -> bilateral prefilter -> key -> extract ->
/// despeckle. Writes NNNN.rgba.png / NNNN.mask.png into out_dir and appends
/// to out_dir/pool.json.
ExtractionSummary run_extraction(const std::filesystem::path& frames_dir, double source_fps,
                                 const std::filesystem::path& out_dir, const ExtractConfig& config = {});

}  // namespace toonsynth
