#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "toonsynth/chroma_key.hpp"
#include "toonsynth/dataset_io.hpp"
#include "toonsynth/imaging/image.hpp"
#include "toonsynth/rng.hpp"

// Procedural data for tests, acceptance runs and demos. Everything is a pure
// function of the stream it is given.
namespace toonsynth::fixtures {

/// Union of at least `min_blobs` flat-colored ellipses until roughly
/// `fill` of the w x h box is covered; straight RGBA with binary alpha.
InstanceAsset make_sprite(RngStream& rng, int w, int h, const std::string& id, int min_blobs = 4,
                          double fill = 0.45);

/// Two-color gradient with low-frequency waves and per-pixel noise of
/// +-`noise` 8-bit levels.
ImageBuffer make_background(RngStream& rng, int w, int h, int noise = 3);

struct ChromaFrame {
  ImageBuffer frame;  // 8-bit levels
  BinaryMask truth;   // sprite pixels
  double hue = 0.0;
};

/// size x size frame keyed with HSV(hue, s, v), s and v drawn from
/// [0.96, 1]; a sprite of random-colored blobs covers about `coverage` of the
/// frame; +-1 level of noise on every channel.
ChromaFrame make_chroma_frame(RngStream& rng, int size, double hue, double coverage);

/// Person-like boxes on photos of common aspect ratios, 1 to `max_boxes` per photo.
GuideBundle make_guide_bundle(RngStream& rng, int photos, int max_boxes = 14);
void write_guide_bundle(const std::filesystem::path& path, const GuideBundle& bundle);

struct FixturePaths {
  std::filesystem::path root;
  std::filesystem::path manifest;
  std::filesystem::path backgrounds;
  std::filesystem::path guides;
  std::filesystem::path config;
};

/// Writes foregrounds/ (+ pool.json), backgrounds/, guide_boxes.json and a
/// config.json pointing at them.
FixturePaths write_fixture_pools(const std::filesystem::path& dir, std::uint64_t seed, int foregrounds = 24,
                                 int backgrounds = 6, int guide_photos = 200, std::uint64_t sample_count = 16);

/// Numbered chroma-key frames (frame_NNNN.png), each holding one sprite
/// covering 10-40% of the frame.
void write_chroma_frames(const std::filesystem::path& dir, std::uint64_t seed, int frames, int size, double hue);

}  // namespace toonsynth::fixtures
