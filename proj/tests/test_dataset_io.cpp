#include <doctest.h>

#include <json.hpp>

#include "test_util.hpp"
#include "toonsynth/dataset_io.hpp"
#include "toonsynth/error.hpp"
#include "toonsynth/fixtures.hpp"
#include "toonsynth/oracles.hpp"
#include "toonsynth/pipeline.hpp"

using namespace toonsynth;

TEST_CASE("RLE conventions") {
  CHECK(rle_encode(BinaryMask(2, 2)).counts == std::vector<std::uint64_t>{4});
  CHECK(rle_encode(BinaryMask(2, 2, true)).counts == std::vector<std::uint64_t>{0, 4});
  // Column-major: a mask true only in the top row of a 2x2 alternates per column.
  BinaryMask top(2, 2);
  top.set(0, 0, true);
  top.set(1, 0, true);
  CHECK(rle_encode(top).counts == std::vector<std::uint64_t>{0, 1, 1, 1, 1});
  CHECK(rle_area(rle_encode(top)) == 2);
  CHECK_THROWS_AS(rle_decode({2, 2, {1, 1}}), FormatError);
}

TEST_CASE("RLE round trip on random masks") {
  RngStream rng(81, 0, StreamTag::Test);
  bool all = true;
  for (int i = 0; i < 10000; ++i) {
    const int w = static_cast<int>(rng.uniform_int(1, 24)), h = static_cast<int>(rng.uniform_int(1, 24));
    const BinaryMask m = oracle::random_mask(rng, w, h, rng.uniform());
    const RleMask r = rle_encode(m);
    all = all && rle_decode(r) == m && rle_area(r) == m.count();
  }
  CHECK(all);
}

TEST_CASE("guide boxes: eligibility and scaling") {
  const GuideBundle b = parse_guide_boxes(
      R"({"photos":[{"id":"p","width":1280,"height":960,"boxes":[[10,20,300,400],[200,100,160,500],[700,300,90,90]]}]})");
  REQUIRE(b.photos.size() == 1);
  CHECK(eligible_photos(b, 3) == std::vector<std::size_t>{0});
  CHECK(eligible_photos(b, 4).empty());
  const auto s = scale_guide_boxes(b.photos[0], 720);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(iou(s[i], s[j]) == iou(b.photos[0].boxes[i], b.photos[0].boxes[j]));
  }
  // 1280 wide -> scale 9/16, letterboxed vertically by 90 px.
  CHECK(s[0] == BoundingBox{10 * 0.5625, 20 * 0.5625 + 90, 310 * 0.5625, 420 * 0.5625 + 90});
  CHECK_THROWS_AS(parse_guide_boxes(R"({"photos":[{"id":"p"}]})"), FormatError);
}

TEST_CASE("COCO document round trip") {
  CocoDocument d;
  d.images.push_back({1, "images/000000.png", 720, 720});
  BinaryMask m(5, 4);
  m.set(1, 1, true);
  m.set(2, 1, true);
  CocoAnnotation a;
  a.id = 7;
  a.image_id = 1;
  a.bbox = {1, 1, 2, 1};
  a.segmentation = rle_encode(m);
  a.area = 2;
  a.amodal = rle_encode(m);
  a.asset_id = "asset_0001";
  d.annotations.push_back(a);
  const auto text = coco_to_json(d);
  const auto back = coco_from_json(text);
  REQUIRE(back.annotations.size() == 1);
  CHECK(back.annotations[0].segmentation == a.segmentation);
  CHECK(back.annotations[0].amodal == a.amodal);
  CHECK(back.annotations[0].asset_id == a.asset_id);
  CHECK(coco_to_json(back) == text);
  CHECK_THROWS_AS(coco_from_json(R"({"images":[],"annotations":[{"id":1,"image_id":1,"bbox":[0,0,1,1],"segmentation":{"size":[2,2],"counts":"abc"}}]})"),
                  FormatError);
}

TEST_CASE("prediction ids must exist in the ground truth") {
  CocoDocument gt;
  gt.images.push_back({1, "a.png", 4, 4});
  CocoDocument pred;
  CocoAnnotation a;
  a.image_id = 5;
  a.bbox = {0, 0, 1, 1};
  a.segmentation = rle_encode(BinaryMask(4, 4));
  pred.annotations.push_back(a);
  a.image_id = 9;
  pred.annotations.push_back(a);
  try {
    detections_from_coco(pred, gt);
    FAIL("expected a FormatError");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('5') != std::string::npos);
    CHECK(msg.find('9') != std::string::npos);
  }
}

TEST_CASE("layout JSON round trip keeps doubles exact") {
  SceneLayout l;
  l.canvas = 720;
  l.background_id = "bg_01";
  l.background_crop = {960, 720, 13, 0};
  l.master_seed = 0xdeadbeefcafef00dull;
  l.sample_index = 42;
  l.strategy = Strategy::PhotoGuided;
  l.guide_photo = 3;
  l.attempts = 2;
  l.harmonization = {HarmonizeMode::Quantize, 16, -1, 123456789012345ull};
  AugmentRecord r;
  r.flip = true;
  r.warp = WarpKind::Grid;
  r.grid = {5, {0.7000000000000001, 1.1, 0.9, 1.2999999999, 1.0}, {1.0, 0.8, 0.75, 1.25, 1.0 / 3.0}};
  r.long_side = 333;
  l.placements.push_back({"asset_0003", r, {10, 20, 110, 353}, 0, BoundingBox{1.0 / 3.0, 2.5, 100.125, 400}});
  AugmentRecord rot;
  rot.warp = WarpKind::Rotation;
  rot.rotation_deg = -17.123456789012345;
  rot.long_side = 200;
  l.placements.push_back({"asset_0001", rot, {0, 0, 150, 200}, 1, std::nullopt});
  CHECK(layout_from_json(layout_to_json(l)) == l);
}

TEST_CASE("dataset write and read") {
  const auto dir = testutil::temp_dir("dataset");
  RngStream rng(82, 0, StreamTag::Test);
  std::vector<InstanceAsset> fgs;
  for (int i = 0; i < 4; ++i) fgs.push_back(fixtures::make_sprite(rng, 120, 160, "s" + std::to_string(i)));
  SynthesisInputs in{AssetPools(std::move(fgs), {{"bg", fixtures::make_background(rng, 900, 720)}}),
                     fixtures::make_guide_bundle(rng, 30)};
  RunConfig cfg;
  cfg.master_seed = 5;
  std::vector<std::pair<AnnotatedSample, SceneLayout>> samples;
  for (std::uint64_t i = 0; i < 3; ++i) {
    auto s = synthesize_sample(i, cfg, in);
    samples.emplace_back(std::move(s.sample), std::move(s.layout));
  }
  const CocoDocument doc = write_dataset(samples, dir);
  CHECK(doc.images.size() == 3);

  for (const auto& a : doc.annotations) {
    const BinaryMask m = rle_decode(a.segmentation);
    CHECK(a.area == m.count());
    const auto box = tight_box(m);
    REQUIRE(box);
    CHECK(a.bbox == std::array<double, 4>{box->x_min, box->y_min, box->width(), box->height()});
  }

  const auto back = read_dataset(dir);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].sample.image == samples[i].first.image);
    REQUIRE(back[i].sample.instances.size() == samples[i].first.instances.size());
    for (std::size_t k = 0; k < back[i].sample.instances.size(); ++k) {
      CHECK(back[i].sample.instances[k].modal_mask == samples[i].first.instances[k].modal_mask);
      CHECK(back[i].sample.instances[k].amodal_mask == samples[i].first.instances[k].amodal_mask);
    }
    REQUIRE(back[i].layout);
    CHECK(*back[i].layout == samples[i].second);
    CHECK(replay_layout(*back[i].layout, in.pools).image == back[i].sample.image);
  }
}

TEST_CASE("empty dataset is a valid COCO document") {
  const auto dir = testutil::temp_dir("empty_dataset");
  const auto doc = write_dataset({}, dir);
  CHECK(doc.images.empty());
  const auto j = nlohmann::json::parse(read_text_file(dir / "annotations.json"));
  CHECK(j["images"].is_array());
  CHECK(j["annotations"].is_array());
  CHECK(j["categories"].is_array());
}

TEST_CASE("pool manifest round trip") {
  const auto dir = testutil::temp_dir("pool");
  PoolManifest m;
  m.entries.push_back({"asset_0000", "0000.rgba.png", "0000.mask.png", AssetSource::ChromaKey, 640, 480, "f.png"});
  write_pool_manifest(dir / "pool.json", m);
  CHECK(read_pool_manifest(dir / "pool.json").entries == m.entries);
  CHECK_THROWS_AS(load_foreground_pool(dir / "pool.json"), IoError);
}
