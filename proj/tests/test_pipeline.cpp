#include <doctest.h>

#include "test_util.hpp"
#include "toonsynth/error.hpp"
#include "toonsynth/fixtures.hpp"
#include "toonsynth/imaging/png.hpp"
#include "toonsynth/pipeline.hpp"

using namespace toonsynth;

namespace {

SynthesisInputs small_inputs(std::uint64_t seed, int guide_photos = 40) {
  RngStream rng(seed, 0, StreamTag::Test);
  std::vector<InstanceAsset> fgs;
  for (int i = 0; i < 5; ++i) {
    fgs.push_back(fixtures::make_sprite(rng, static_cast<int>(rng.uniform_int(80, 200)),
                                        static_cast<int>(rng.uniform_int(100, 240)), "s" + std::to_string(i)));
  }
  std::vector<Background> bgs{{"a", fixtures::make_background(rng, 760, 720)}, {"b", fixtures::make_background(rng, 720, 800)}};
  return {AssetPools(std::move(fgs), std::move(bgs)), fixtures::make_guide_bundle(rng, guide_photos)};
}

}  // namespace

TEST_CASE("synthesized samples are a pure function of the index") {
  const auto in = small_inputs(91);
  RunConfig cfg;
  cfg.master_seed = 17;
  for (std::uint64_t i = 0; i < 3; ++i) {
    const auto a = synthesize_sample(i, cfg, in);
    const auto b = synthesize_sample(i, cfg, in);
    CHECK(a.sample.image == b.sample.image);
    CHECK(a.layout == b.layout);
    CHECK(replay_layout(a.layout, in.pools).image == a.sample.image);
    CHECK(a.layout.sample_index == i);
    for (const auto& inst : a.sample.instances) CHECK(tight_box(inst.modal_mask) == inst.bbox);
  }
}

TEST_CASE("missing guides fall back to side-by-side") {
  auto in = small_inputs(92, 0);
  RunConfig cfg;
  cfg.strategy_weights = {1.0, 0.0};
  const auto s = synthesize_sample(0, cfg, in);
  CHECK(s.layout.strategy == Strategy::SideBySide);
  CHECK(s.layout.strategy_fallback);
  CHECK(s.layout.attempts == 2);
}

TEST_CASE("photo-guided samples record their guide boxes") {
  const auto in = small_inputs(93, 200);
  RunConfig cfg;
  cfg.strategy_weights = {1.0, 0.0};
  for (std::uint64_t i = 0; i < 3; ++i) {
    const auto s = synthesize_sample(i, cfg, in);
    CHECK(s.layout.strategy == Strategy::PhotoGuided);
    CHECK(s.layout.guide_photo >= 0);
    for (const auto& p : s.layout.placements) {
      REQUIRE(p.guide_box);
      CHECK(std::max(p.target_box.width(), p.target_box.height()) <= 540);
    }
  }
}

TEST_CASE("unplaceable scenes report the placement error") {
  RngStream rng(94, 0, StreamTag::Test);
  std::vector<InstanceAsset> fgs{fixtures::make_sprite(rng, 100, 100, "s")};
  SynthesisInputs in{AssetPools(std::move(fgs), {{"a", fixtures::make_background(rng, 64, 64)}}), {}};
  RunConfig cfg;
  cfg.canvas = 64;
  cfg.subjects = {2.5, 3, 3};
  cfg.iou_min = 0.0;
  cfg.iou_max = 0.0;
  cfg.augment.long_side_min = 0.9;
  cfg.augment.long_side_max = 1.0;
  cfg.max_attempts = 2;
  cfg.strategy_weights = {0.0, 1.0};
  try {
    synthesize_sample(0, cfg, in);
    FAIL("expected a placement failure");
  } catch (const Error& e) {
    // Side-by-side fails first; the fallback then has no guides.
    const std::string msg = e.what();
    CHECK(msg.find("NoFeasiblePosition") != std::string::npos);
    CHECK(msg.find("InsufficientGuides") != std::string::npos);
  }
}

TEST_CASE("run_synthesis writes a dataset and preview") {
  const auto in = small_inputs(95);
  const auto dir = testutil::temp_dir("run");
  RunConfig cfg;
  cfg.sample_count = 9;
  const auto s = run_synthesis(cfg, in, dir, 9);
  CHECK(s.written == 9);
  CHECK(s.failures.empty());
  const auto preview = read_png(dir / "preview.png");
  CHECK(preview.width() == 720);
  CHECK(preview.height() == 720);
  CHECK(std::filesystem::exists(dir / "layouts" / "000008.json"));

  const auto empty = testutil::temp_dir("run_empty");
  cfg.sample_count = 0;
  CHECK(run_synthesis(cfg, in, empty).written == 0);
  CHECK(std::filesystem::exists(empty / "annotations.json"));
}

TEST_CASE("extraction over a sprite-over-green directory") {
  const auto dir = testutil::temp_dir("extract");
  fixtures::write_chroma_frames(dir / "frames", 96, 30, 128, 1.0 / 3.0);
  const auto s = run_extraction(dir / "frames", 30.0, dir / "pool");
  CHECK(s.frames_found == 30);
  CHECK(s.frames.size() == 3);
  CHECK(s.added == 3);
  CHECK(read_pool_manifest(s.manifest).entries.size() == 3);
  for (const auto& f : s.frames) CHECK(f.status == "ok");
  // Appending keeps earlier entries and numbering.
  const auto again = run_extraction(dir / "frames", 30.0, dir / "pool");
  CHECK(again.added == 3);
  const auto m = read_pool_manifest(s.manifest);
  CHECK(m.entries.size() == 6);
  CHECK(m.entries.back().asset_id == "asset_0005");
  CHECK(load_foreground_pool(s.manifest).size() == 6);
}
