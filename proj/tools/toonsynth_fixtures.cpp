// Writes small synthetic inputs for demos and tests: pools, chroma-key frames
// and a guide-box bundle.
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "toonsynth/error.hpp"
#include "toonsynth/fixtures.hpp"
#include "toonsynth/rng.hpp"

namespace fs = std::filesystem;
using namespace toonsynth;

int main(int argc, char** argv) {
  CLI::App app{"Synthetic fixture writer"};
  app.require_subcommand(1);
  std::uint64_t seed = 7;
  app.add_option("--seed", seed, "Master seed");

  auto* pools = app.add_subcommand("pools", "Foreground pool, backgrounds, guide boxes and a config");
  fs::path pools_out;
  int fg = 24, bg = 6, photos = 200;
  std::uint64_t samples = 16;
  pools->add_option("--out", pools_out)->required();
  pools->add_option("--foregrounds", fg)->check(CLI::PositiveNumber);
  pools->add_option("--backgrounds", bg)->check(CLI::PositiveNumber);
  pools->add_option("--photos", photos)->check(CLI::PositiveNumber);
  pools->add_option("--samples", samples, "sample_count written into config.json");

  auto* frames = app.add_subcommand("frames", "Numbered chroma-key frames");
  fs::path frames_out;
  int count = 30, size = 256;
  double hue = 1.0 / 3.0;
  frames->add_option("--out", frames_out)->required();
  frames->add_option("--count", count)->check(CLI::PositiveNumber);
  frames->add_option("--size", size)->check(CLI::Range(32, 4096));
  frames->add_option("--hue", hue)->check(CLI::Range(0.0, 1.0));

  auto* guides = app.add_subcommand("guides", "Guide-box bundle");
  fs::path guides_out;
  guides->add_option("--out", guides_out)->required();
  guides->add_option("--photos", photos)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*pools) {
      const auto p = fixtures::write_fixture_pools(pools_out, seed, fg, bg, photos, samples);
      std::printf("config %s\n", p.config.string().c_str());
    } else if (*frames) {
      fixtures::write_chroma_frames(frames_out, seed, count, size, hue);
      std::printf("%d frames in %s\n", count, frames_out.string().c_str());
    } else if (*guides) {
      RngStream rng(seed, 0, StreamTag::Test);
      fixtures::write_guide_bundle(guides_out, fixtures::make_guide_bundle(rng, photos));
      std::printf("%d photos in %s\n", photos, guides_out.string().c_str());
    }
  } catch (const Error& e) {
    std::cerr << "toonsynth_fixtures: " << e.kind() << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
