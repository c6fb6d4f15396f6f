#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "toonsynth/eval.hpp"
#include "toonsynth/oracles.hpp"
#include "toonsynth/rng.hpp"

using namespace toonsynth;

namespace {

// Straightforward COCO-style AP over boxes, written without the matrix
// machinery: per threshold, greedy matching per image, pooled PR curve,
// precision envelope, 101 recall samples.
double naive_box_ap(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts) {
  if (gts.empty()) return 0.0;
  std::vector<std::int64_t> images;
  for (const auto& g : gts) images.push_back(g.image_id);
  for (const auto& d : dets) images.push_back(d.image_id);
  std::sort(images.begin(), images.end());
  images.erase(std::unique(images.begin(), images.end()), images.end());

  double total = 0.0;
  const auto thresholds = coco_thresholds();
  for (double t : thresholds) {
    std::vector<std::pair<double, bool>> flags;
    for (auto img : images) {
      std::vector<const Detection*> ds;
      std::vector<const GroundTruth*> gs;
      for (const auto& d : dets) {
        if (d.image_id == img) ds.push_back(&d);
      }
      for (const auto& g : gts) {
        if (g.image_id == img) gs.push_back(&g);
      }
      std::stable_sort(ds.begin(), ds.end(), [](auto a, auto b) { return a->score > b->score; });
      if (ds.size() > 100) ds.resize(100);
      std::vector<bool> used(gs.size(), false);
      for (const auto* d : ds) {
        int best = -1;
        double best_iou = t;
        for (std::size_t j = 0; j < gs.size(); ++j) {
          if (used[j]) continue;
          const double v = iou(d->box, gs[j]->box);
          if (v >= best_iou && (best < 0 || v > best_iou)) {
            best = static_cast<int>(j);
            best_iou = v;
          }
        }
        if (best >= 0) used[static_cast<std::size_t>(best)] = true;
        flags.push_back({d->score, best >= 0});
      }
    }
    std::stable_sort(flags.begin(), flags.end(), [](auto& a, auto& b) { return a.first > b.first; });
    std::vector<double> prec, rec;
    double tp = 0, fp = 0;
    for (const auto& [s, ok] : flags) {
      (ok ? tp : fp) += 1;
      prec.push_back(tp / (tp + fp));
      rec.push_back(tp / static_cast<double>(gts.size()));
    }
    for (std::size_t i = prec.size(); i-- > 1;) prec[i - 1] = std::max(prec[i - 1], prec[i]);
    double sum = 0.0;
    for (int j = 0; j <= 100; ++j) {
      const double r = j / 100.0;
      for (std::size_t i = 0; i < rec.size(); ++i) {
        if (rec[i] >= r) {
          sum += prec[i];
          break;
        }
      }
    }
    total += sum / 101.0;
  }
  return total / static_cast<double>(thresholds.size());
}

BinaryMask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  BinaryMask m(w, h);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m.set(x, y, true);
  }
  return m;
}

}  // namespace

TEST_CASE("thresholds") {
  const auto t = coco_thresholds();
  REQUIRE(t.size() == 10);
  CHECK(t.front() == 0.5);
  CHECK(t.back() == 0.95);
  CHECK(t[3] == 0.65);
}

TEST_CASE("band width from the diagonal") {
  CHECK(boundary_distance(720, 720) == 20);
  CHECK(boundary_distance(32, 32) == 1);
  CHECK(boundary_distance(10, 10) == 1);
}

TEST_CASE("boundary band conventions") {
  const BinaryMask thin = rect_mask(20, 20, 5, 5, 9, 15);
  CHECK(boundary_band(thin, 3) == thin);
  const BinaryMask full(10, 10, true);
  const BinaryMask band = boundary_band(full, 1);
  CHECK(band.count() == 36);
  CHECK(band.at(0, 5));
  CHECK_FALSE(band.at(5, 5));
}

TEST_CASE("boundary and mask IoU basics") {
  const BinaryMask g = rect_mask(40, 40, 5, 5, 25, 30);
  CHECK(boundary_iou(g, g) == 1.0);
  CHECK(mask_iou(g, g) == 1.0);
  const BinaryMask far = rect_mask(40, 40, 30, 30, 38, 38);
  CHECK(boundary_iou(g, far) == 0.0);
  CHECK(mask_iou(g, far) == 0.0);
  const BinaryMask half = rect_mask(40, 40, 0, 0, 40, 20);
  CHECK(mask_iou(half, ~half) == 0.0);
  const BinaryMask empty(40, 40);
  CHECK(boundary_iou(empty, empty) == 1.0);
}

TEST_CASE("boundary and mask IoU equal the counting oracles") {
  RngStream rng(61, 0, StreamTag::Test);
  for (int i = 0; i < 300; ++i) {
    const BinaryMask g = oracle::random_shape_mask(rng, 32, 32);
    const BinaryMask p = i % 2 ? oracle::random_shape_mask(rng, 32, 32) : oracle::random_mask(rng, 32, 32, 0.5);
    const int d = static_cast<int>(rng.uniform_int(1, 5));
    const auto rb = oracle::boundary_iou(g, p, d);
    CHECK(boundary_iou(g, p, d) == (rb.den ? double(rb.num) / double(rb.den) : 1.0));
    CHECK(boundary_band(g, d) == oracle::boundary_band(g, d));
    const auto rm = oracle::mask_iou(g, p);
    CHECK(mask_iou(g, p) == (rm.den ? double(rm.num) / double(rm.den) : 1.0));
  }
}

TEST_CASE("AP fixtures") {
  const std::vector<GroundTruth> gt{{1, {0, 0, 10, 10}, std::nullopt}};
  // IoU 0.6 at score 0.9 and IoU 0.2 at score 0.8.
  const std::vector<Detection> two{{1, 0.9, {0, 0, 10, 6}, std::nullopt}, {1, 0.8, {0, 0, 10, 2}, std::nullopt}};
  const auto r = average_precision(two, gt, IouKind::Box);
  CHECK(r.mean == 0.3);
  for (std::size_t i = 0; i < r.per_threshold.size(); ++i) CHECK(r.per_threshold[i] == (i < 3 ? 1.0 : 0.0));

  const std::vector<Detection> perfect{{1, 1.0, {0, 0, 10, 10}, std::nullopt}};
  const auto p = average_precision(perfect, gt, IouKind::Box);
  CHECK(p.mean == 1.0);
  for (double v : p.per_threshold) CHECK(v == 1.0);
  CHECK(average_precision(std::span<const Detection>{}, gt, IouKind::Box).mean == 0.0);
  CHECK(average_precision(perfect, std::span<const GroundTruth>{}, IouKind::Box).mean == 0.0);
}

TEST_CASE("AP equals the naive reference on random scenes") {
  RngStream rng(62, 0, StreamTag::Test);
  for (int t = 0; t < 60; ++t) {
    std::vector<GroundTruth> gts;
    std::vector<Detection> dets;
    const int images = static_cast<int>(rng.uniform_int(1, 4));
    for (int img = 1; img <= images; ++img) {
      const int ng = static_cast<int>(rng.uniform_int(0, 6));
      for (int i = 0; i < ng; ++i) {
        const double x = rng.uniform(0, 80), y = rng.uniform(0, 80);
        gts.push_back({img, {x, y, x + rng.uniform(5, 40), y + rng.uniform(5, 40)}, std::nullopt});
      }
      const int nd = static_cast<int>(rng.uniform_int(0, 12));
      for (int i = 0; i < nd; ++i) {
        BoundingBox b;
        if (!gts.empty() && rng.bernoulli(0.7)) {
          const auto& g = gts[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(gts.size()) - 1))].box;
          b = {g.x_min + rng.uniform(-4, 4), g.y_min + rng.uniform(-4, 4), g.x_max + rng.uniform(-4, 4), g.y_max + rng.uniform(-4, 4)};
        } else {
          const double x = rng.uniform(0, 80), y = rng.uniform(0, 80);
          b = {x, y, x + rng.uniform(5, 40), y + rng.uniform(5, 40)};
        }
        // Coarse scores so ties occur.
        dets.push_back({img, std::round(rng.uniform() * 8) / 8, b, std::nullopt});
      }
    }
    CHECK(average_precision(dets, gts, IouKind::Box).mean == doctest::Approx(naive_box_ap(dets, gts)).epsilon(1e-12));
  }
}

TEST_CASE("ties in IoU go to the lowest ground-truth index") {
  const std::vector<GroundTruth> gt{{1, {0, 0, 10, 10}, std::nullopt}, {1, {0, 0, 10, 10}, std::nullopt}};
  const std::vector<Detection> det{{1, 0.5, {0, 0, 10, 10}, std::nullopt}};
  const auto r = average_precision(det, gt, IouKind::Box);
  REQUIRE(r.per_image.size() == 1);
  REQUIRE(r.per_image[0].pairs.size() == 1);
  CHECK(r.per_image[0].pairs[0].ground_truth == 0);
  // Recall tops out at 0.5: 51 of the 101 recall samples see precision 1.
  CHECK(r.mean == doctest::Approx(51.0 / 101.0));
}

TEST_CASE("evaluate reports mask metrics only when every record has a mask") {
  const BinaryMask m = rect_mask(30, 30, 3, 3, 20, 25);
  const std::vector<GroundTruth> gt{{1, {3, 3, 20, 25}, m}};
  const std::vector<Detection> det{{1, 1.0, {3, 3, 20, 25}, m}};
  const auto rep = evaluate(det, gt);
  REQUIRE(rep.mask);
  REQUIRE(rep.boundary);
  CHECK(rep.box.mean == 1.0);
  CHECK(rep.mask->mean == 1.0);
  CHECK(rep.boundary->mean == 1.0);
  const std::vector<Detection> nomask{{1, 1.0, {3, 3, 20, 25}, std::nullopt}};
  CHECK_FALSE(evaluate(nomask, gt).mask);
  const auto json = eval_report_json(rep);
  CHECK(json.find("\"Boundary AP\"") != std::string::npos);
}
