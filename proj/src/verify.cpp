#include "toonsynth/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include <omp.h>

#include "toonsynth/chroma_key.hpp"
#include "toonsynth/config.hpp"
#include "toonsynth/eval.hpp"
#include "toonsynth/fixtures.hpp"
#include "toonsynth/harmonizer.hpp"
#include "toonsynth/imaging/distance.hpp"
#include "toonsynth/imaging/filter.hpp"
#include "toonsynth/loss.hpp"
#include "toonsynth/oracles.hpp"
#include "toonsynth/pipeline.hpp"

namespace toonsynth {

namespace {

constexpr double kGradTol = 1e-4;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

template <class F>
CheckResult timed(const std::string& name, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r{name, false, "", 0.0};
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

// Tracks the worst relative error over all points.
struct Worst {
  double err = 0.0;
  void add(double e) { err = std::max(err, std::isnan(e) ? INFINITY : e); }
  void finish(CheckResult& r, int points) const {
    r.passed = err < kGradTol;
    r.detail = std::to_string(points) + " points, max rel err " + fmt("%.3g", err);
  }
};

// Analytic vs central differences on `coords` sampled coordinates plus one
// random direction.
double gradient_error(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
                      const std::vector<double>& grad, RngStream& rng, std::size_t coords, double h = 1e-4) {
  std::vector<double> a, n;
  if (x.size() <= coords) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      a.push_back(grad[i]);
      n.push_back(oracle::central_difference(f, x, i, h));
    }
  } else {
    for (std::size_t k = 0; k < coords; ++k) {
      const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(x.size()) - 1));
      a.push_back(grad[i]);
      n.push_back(oracle::central_difference(f, x, i, h));
    }
  }
  std::vector<double> dir(x.size());
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dir[i] = rng.uniform(-1.0, 1.0);
    dot += dir[i] * grad[i];
  }
  auto along = [&](double t) {
    std::vector<double> y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += t * dir[i];
    return f(y);
  };
  a.push_back(dot);
  n.push_back((along(h) - along(-h)) / (2 * h));
  return oracle::relative_error(a, n);
}

bool near(double a, double b, double gap) { return std::fabs(a - b) > gap; }

BoundingBox random_pred(RngStream& rng, const BoundingBox& g) {
  for (;;) {
    BoundingBox p{g.x_min + rng.uniform(-20, 20), g.y_min + rng.uniform(-20, 20), g.x_max + rng.uniform(-20, 20),
                  g.y_max + rng.uniform(-20, 20)};
    if (p.width() < 2 || p.height() < 2) continue;
    // Stay away from the kinks of min/max.
    const double gap = 1e-2;
    if (!near(p.x_min, g.x_min, gap) || !near(p.x_max, g.x_max, gap) || !near(p.y_min, g.y_min, gap) ||
        !near(p.y_max, g.y_max, gap) || !near(p.x_min, g.x_max, gap) || !near(p.x_max, g.x_min, gap) ||
        !near(p.y_min, g.y_max, gap) || !near(p.y_max, g.y_min, gap)) {
      continue;
    }
    return p;
  }
}

Tensor random_tensor(RngStream& rng, std::vector<int> shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

CheckResult check_giou_gradient(const VerifyOptions& o) {
  return timed("giou gradient (standard)", [&](CheckResult& r) {
    RngStream rng(o.seed, 1, StreamTag::Test);
    Worst worst;
    for (int pt = 0; pt < o.points; ++pt) {
      std::vector<BoundingBox> gt, pred;
      for (int i = 0; i < 3; ++i) {
        const double x = rng.uniform(0, 100), y = rng.uniform(0, 100);
        gt.push_back({x, y, x + rng.uniform(5, 60), y + rng.uniform(5, 60)});
        pred.push_back(random_pred(rng, gt.back()));
      }
      auto unpack = [&](const std::vector<double>& v) {
        std::vector<BoundingBox> b;
        for (std::size_t i = 0; i < v.size(); i += 4) b.push_back({v[i], v[i + 1], v[i + 2], v[i + 3]});
        return b;
      };
      std::vector<double> x;
      for (const auto& b : pred) x.insert(x.end(), {b.x_min, b.y_min, b.x_max, b.y_max});
      const auto res = loss::giou_loss(pred, gt, loss::GiouMode::Standard);
      std::vector<double> grad;
      for (const auto& g : res.grad) grad.insert(grad.end(), g.begin(), g.end());
      if (o.fault == "giou-grad") {
        for (double& g : grad) g = g * 1.01 + 1e-3;
      }
      auto f = [&](const std::vector<double>& v) { return loss::giou_loss(unpack(v), gt).value; };
      worst.add(gradient_error(f, x, grad, rng, x.size()));
    }
    worst.finish(r, o.points);
  });
}

CheckResult check_qfl_gradient(const VerifyOptions& o) {
  return timed("quality focal gradient (beta=2)", [&](CheckResult& r) {
    RngStream rng(o.seed, 2, StreamTag::Test);
    Worst worst;
    for (int pt = 0; pt < o.points; ++pt) {
      std::vector<double> y(8), s(8);
      for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = rng.bernoulli(0.3) ? static_cast<double>(rng.uniform_int(0, 1)) : rng.uniform();
        do {
          s[i] = rng.uniform(0.02, 0.98);
        } while (std::fabs(s[i] - y[i]) < 1e-2);
      }
      const auto res = loss::quality_focal_loss(y, s, 2.0);
      auto f = [&](const std::vector<double>& v) { return loss::quality_focal_loss(y, v, 2.0).value; };
      worst.add(gradient_error(f, s, res.grad, rng, s.size(), 1e-5));
    }
    worst.finish(r, o.points);
  });
}

CheckResult check_dice_gradient(const VerifyOptions& o) {
  return timed("dice gradient (eps=1e-6, 320^2 resample)", [&](CheckResult& r) {
    RngStream rng(o.seed, 3, StreamTag::Test);
    Worst worst;
    for (int pt = 0; pt < o.points; ++pt) {
      const int n = 2;
      const int ph = static_cast<int>(rng.uniform_int(4, 12)), pw = static_cast<int>(rng.uniform_int(4, 12));
      const int gh = static_cast<int>(rng.uniform_int(8, 40)), gw = static_cast<int>(rng.uniform_int(8, 40));
      const Tensor pred = random_tensor(rng, {n, ph, pw}, 0.0, 1.0);
      Tensor gt = random_tensor(rng, {n, gh, gw}, 0.0, 1.0);
      if (rng.bernoulli(0.5)) {
        for (double& v : gt.data) v = v > 0.5 ? 1.0 : 0.0;
      }
      const auto res = loss::dice_loss(pred, gt);
      auto f = [&](const std::vector<double>& v) { return loss::dice_loss(Tensor(pred.shape, v), gt).value; };
      worst.add(gradient_error(f, pred.data, res.grad.data, rng, 8));
    }
    worst.finish(r, o.points);
  });
}

CheckResult check_feature_mse_gradient(const VerifyOptions& o) {
  return timed("feature MSE gradient", [&](CheckResult& r) {
    RngStream rng(o.seed, 4, StreamTag::Test);
    Worst worst;
    for (int pt = 0; pt < o.points; ++pt) {
      std::vector<Tensor> pred, gt;
      std::vector<std::size_t> offset;
      std::size_t total = 0;
      for (int d = 0; d < 6; ++d) {
        const int c = static_cast<int>(rng.uniform_int(1, 4)), s = 2 + (5 - d);
        pred.push_back(random_tensor(rng, {c, s, s}, -2.0, 2.0));
        gt.push_back(random_tensor(rng, {c, s, s}, -2.0, 2.0));
        offset.push_back(total);
        total += pred.back().size();
      }
      const auto reduction = pt % 2 == 0 ? loss::Reduction::Sum : loss::Reduction::Mean;
      const auto res = loss::feature_mse_loss(pred, gt, reduction);
      std::vector<double> x, grad;
      for (std::size_t d = 0; d < pred.size(); ++d) {
        x.insert(x.end(), pred[d].data.begin(), pred[d].data.end());
        grad.insert(grad.end(), res.grad[d].data.begin(), res.grad[d].data.end());
      }
      auto f = [&](const std::vector<double>& v) {
        std::vector<Tensor> p = pred;
        for (std::size_t d = 0; d < p.size(); ++d) {
          std::copy(v.begin() + static_cast<std::ptrdiff_t>(offset[d]),
                    v.begin() + static_cast<std::ptrdiff_t>(offset[d] + p[d].size()), p[d].data.begin());
        }
        return loss::feature_mse_loss(p, gt, reduction).value;
      };
      worst.add(gradient_error(f, x, grad, rng, 12));
    }
    worst.finish(r, o.points);
  });
}

CheckResult check_ppa_gradient(const VerifyOptions& o) {
  return timed("ppa gradient (lambda 1,1,1,1,1,5)", [&](CheckResult& r) {
    RngStream rng(o.seed, 5, StreamTag::Test);
    const loss::LossDefaults defaults;
    Worst worst;
    double literal_gap = 0.0;
    for (int pt = 0; pt < o.points; ++pt) {
      const int h = 24, w = 20;
      Tensor gt = random_tensor(rng, {h, w}, 0.0, 1.0);
      if (pt % 3 != 0) {
        for (double& v : gt.data) v = v > 0.6 ? 1.0 : 0.0;
      }
      std::vector<Tensor> side;
      const int sizes[6][2] = {{24, 20}, {12, 10}, {6, 5}, {6, 5}, {3, 3}, {3, 2}};
      std::vector<std::size_t> offset;
      std::size_t total = 0;
      for (const auto& s : sizes) {
        side.push_back(random_tensor(rng, {s[0], s[1]}, 0.05, 0.95));
        offset.push_back(total);
        total += side.back().size();
      }
      const auto res = loss::ppa_loss(side, gt, defaults.ppa_level_weights);
      std::vector<double> x, grad;
      for (std::size_t d = 0; d < side.size(); ++d) {
        x.insert(x.end(), side[d].data.begin(), side[d].data.end());
        grad.insert(grad.end(), res.grad[d].data.begin(), res.grad[d].data.end());
      }
      auto f = [&](const std::vector<double>& v) {
        std::vector<Tensor> s = side;
        for (std::size_t d = 0; d < s.size(); ++d) {
          std::copy(v.begin() + static_cast<std::ptrdiff_t>(offset[d]),
                    v.begin() + static_cast<std::ptrdiff_t>(offset[d] + s[d].size()), s[d].data.begin());
        }
        return loss::ppa_loss(s, gt, defaults.ppa_level_weights).value;
      };
      worst.add(gradient_error(f, x, grad, rng, 12));

      const double one = loss::ppa_loss(std::span<const Tensor>(&side[0], 1), gt, std::vector<double>{1.0}).value;
      literal_gap = std::max(literal_gap, std::fabs(one - oracle::ppa_literal(side[0].data, gt.data, h, w)));
    }
    worst.finish(r, o.points);
    if (literal_gap > 1e-9) r.passed = false;
    r.detail += ", literal oracle gap " + fmt("%.3g", literal_gap);
  });
}

CheckResult check_perfect_prediction(const VerifyOptions& o) {
  return timed("losses vanish at perfect prediction", [&](CheckResult& r) {
    RngStream rng(o.seed, 6, StreamTag::Test);
    const loss::LossDefaults d;
    std::ostringstream detail;
    double worst = 0.0;
    auto note = [&](const char* name, double v) {
      worst = std::max(worst, std::fabs(v));
      detail << name << "=" << fmt("%.2g", v) << " ";
    };
    std::vector<BoundingBox> boxes{{10, 20, 50, 90}, {0, 0, 1, 1}, {100.5, 3.25, 180, 7}};
    note("giou", loss::giou_loss(boxes, boxes).value);

    std::vector<double> y{0, 1, 0.3, 0.75, 1, 0};
    note("qfl", loss::quality_focal_loss(y, y, d.qfl_beta).value);

    Tensor m({2, 40, 30});
    for (double& v : m.data) v = rng.bernoulli(0.4) ? 1.0 : 0.0;
    note("dice", loss::dice_loss(m, m, d.dice_eps, d.dice_size).value);

    std::vector<Tensor> feats{random_tensor(rng, {3, 4, 4}, -1, 1), random_tensor(rng, {2, 2, 2}, -1, 1)};
    note("mse", loss::feature_mse_loss(feats, feats).value);

    Tensor gt({32, 32});
    for (int yy = 8; yy < 24; ++yy) {
      for (int xx = 6; xx < 20; ++xx) gt.data[static_cast<std::size_t>(yy) * 32 + xx] = 1.0;
    }
    std::vector<Tensor> side(6, gt);
    note("ppa", loss::ppa_loss(side, gt, d.ppa_level_weights).value);
    r.passed = worst < 1e-5;
    r.detail = detail.str();
  });
}

CheckResult check_boundary_iou_oracle(const VerifyOptions& o) {
  return timed("boundary IoU = brute-force oracle", [&](CheckResult& r) {
    RngStream rng(o.seed, 7, StreamTag::Test);
    int mismatches = 0;
    for (int i = 0; i < o.mask_pairs; ++i) {
      const BinaryMask g = i % 2 ? oracle::random_shape_mask(rng, 32, 32) : oracle::random_mask(rng, 32, 32, rng.uniform());
      const BinaryMask p = i % 3 ? oracle::random_shape_mask(rng, 32, 32) : oracle::random_mask(rng, 32, 32, rng.uniform());
      const int d = i % 4 == 0 ? static_cast<int>(rng.uniform_int(1, 6)) : boundary_distance(32, 32);
      const auto ref = oracle::boundary_iou(g, p, d);
      const double expect = ref.den == 0 ? 1.0 : static_cast<double>(ref.num) / static_cast<double>(ref.den);
      if (boundary_iou(g, p, d) != expect) ++mismatches;
    }
    r.passed = mismatches == 0;
    r.detail = std::to_string(o.mask_pairs) + " pairs, " + std::to_string(mismatches) + " mismatches";
  });
}

CheckResult check_ap_fixtures(const VerifyOptions&) {
  return timed("AP fixtures (0.3 / 1 / 0)", [&](CheckResult& r) {
    const std::vector<GroundTruth> gts{{1, {0, 0, 10, 10}, std::nullopt}};
    const std::vector<Detection> two{{1, 0.9, {0, 0, 10, 6}, std::nullopt}, {1, 0.8, {0, 0, 10, 2}, std::nullopt}};
    const std::vector<Detection> perfect{{1, 1.0, {0, 0, 10, 10}, std::nullopt}};
    const double a = average_precision(two, gts, IouKind::Box).mean;
    const double b = average_precision(perfect, gts, IouKind::Box).mean;
    const double c = average_precision(std::span<const Detection>{}, gts, IouKind::Box).mean;
    r.passed = a == 0.3 && b == 1.0 && c == 0.0;
    r.detail = "two-detection " + fmt("%.17g", a) + ", perfect " + fmt("%g", b) + ", empty " + fmt("%g", c);
  });
}

CheckResult check_assignment_oracle(const VerifyOptions& o) {
  return timed("label assignment = brute-force greedy", [&](CheckResult& r) {
    RngStream rng(o.seed, 8, StreamTag::Test);
    const loss::AnchorGrid grid;
    int bad = 0;
    const int scenes = std::max(1, o.points / 5);
    for (int s = 0; s < scenes; ++s) {
      std::vector<std::array<double, 4>> off(grid.count());
      std::vector<double> conf(grid.count());
      for (std::size_t i = 0; i < off.size(); ++i) {
        for (double& v : off[i]) v = rng.uniform(2, 80);
        conf[i] = rng.uniform();
      }
      const auto decoded = loss::decode_all(grid, off);
      std::vector<BoundingBox> gts;
      const int n = static_cast<int>(rng.uniform_int(1, 8));
      for (int i = 0; i < n; ++i) {
        const double x = rng.uniform(0, 600), y = rng.uniform(0, 600);
        gts.push_back({x, y, x + rng.uniform(10, 120), y + rng.uniform(10, 120)});
      }
      if (s % 4 == 0) gts.push_back(gts.front());  // duplicate target
      const auto got = loss::assign_labels(grid, decoded, conf, gts);
      const auto want = oracle::greedy_assignment(decoded, gts, grid.input_size, 0.5);
      for (std::size_t g = 0; g < gts.size(); ++g) bad += got[g].candidate != want[g];
    }
    r.passed = bad == 0;
    r.detail = std::to_string(scenes) + " scenes over " + std::to_string(grid.count()) + " candidates, " +
               std::to_string(bad) + " mismatches";
  });
}

CheckResult check_serial_parallel(const VerifyOptions& o) {
  return timed("serial = OpenMP kernels", [&](CheckResult& r) {
    const int saved = omp_get_max_threads();
    omp_set_num_threads(4);
    RngStream rng(o.seed, 9, StreamTag::Test);
    const ImageBuffer img = fixtures::make_background(rng, 96, 64, 20);
    const bool bil = bilateral_filter(img, 9, 30.0) == serial::bilateral_filter(img, 9, 30.0);
    const BinaryMask m = oracle::random_shape_mask(rng, 80, 70);
    const bool edt = squared_distance_to_complement(m, Border::Exterior) ==
                     serial::squared_distance_to_complement(m, Border::Exterior);
    const auto frame = fixtures::make_chroma_frame(rng, 128, 0.33, 0.3).frame;
    const bool hist = hue_histogram(frame).counts == serial::hue_histogram(frame).counts;
    std::vector<Rgb> pts;
    std::vector<double> wts;
    for (int i = 0; i < 3000; ++i) {
      pts.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
      wts.push_back(static_cast<double>(rng.uniform_int(1, 5)));
    }
    RngStream a(77), b(77);
    const Palette pa = kmeans(pts, wts, 16, a), pb = serial::kmeans(pts, wts, 16, b);
    const bool km = pa.centers == pb.centers && pa.objective_history == pb.objective_history;
    omp_set_num_threads(saved);
    r.passed = bil && edt && hist && km;
    r.detail = std::string("bilateral ") + (bil ? "ok" : "DIFF") + ", edt " + (edt ? "ok" : "DIFF") + ", hue histogram " +
               (hist ? "ok" : "DIFF") + ", k-means " + (km ? "ok" : "DIFF");
  });
}

CheckResult check_synthesis_determinism(const VerifyOptions& o) {
  return timed("synthesis determinism and replay", [&](CheckResult& r) {
    RngStream rng(o.seed, 10, StreamTag::Test);
    std::vector<InstanceAsset> fgs;
    for (int i = 0; i < 6; ++i) {
      fgs.push_back(fixtures::make_sprite(rng, static_cast<int>(rng.uniform_int(100, 300)),
                                          static_cast<int>(rng.uniform_int(120, 320)), "sprite_" + std::to_string(i)));
    }
    std::vector<Background> bgs{{"a", fixtures::make_background(rng, 800, 600)},
                                {"b", fixtures::make_background(rng, 600, 900)}};
    SynthesisInputs in{AssetPools(std::move(fgs), std::move(bgs)), fixtures::make_guide_bundle(rng, 60)};
    RunConfig cfg;
    cfg.master_seed = o.seed;
    const int n = o.determinism_samples;

    const int saved = omp_get_max_threads();
    std::vector<SynthesizedSample> one, many(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) one.push_back(synthesize_sample(static_cast<std::uint64_t>(i), cfg, in));
    omp_set_num_threads(3);
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = n - 1; i >= 0; --i) many[static_cast<std::size_t>(i)] = synthesize_sample(static_cast<std::uint64_t>(i), cfg, in);
    omp_set_num_threads(saved);

    int diffs = 0, replay_diffs = 0;
    for (int i = 0; i < n; ++i) {
      const auto& a = one[static_cast<std::size_t>(i)];
      const auto& b = many[static_cast<std::size_t>(i)];
      diffs += !(a.sample.image == b.sample.image) || !(a.layout == b.layout);
      replay_diffs += !(replay_layout(a.layout, in.pools, cfg.harmonize.kmeans).image == a.sample.image);
    }
    r.passed = diffs == 0 && replay_diffs == 0;
    r.detail = std::to_string(n) + " samples, 1 vs 3 threads: " + std::to_string(diffs) + " differ; replay: " +
               std::to_string(replay_diffs) + " differ";
  });
}

std::vector<CheckResult> run_verify(const VerifyOptions& o) {
  return {check_giou_gradient(o),       check_qfl_gradient(o),        check_dice_gradient(o),
          check_feature_mse_gradient(o), check_ppa_gradient(o),        check_perfect_prediction(o),
          check_boundary_iou_oracle(o), check_ap_fixtures(o),          check_assignment_oracle(o),
          check_serial_parallel(o),     check_synthesis_determinism(o)};
}

}  // namespace toonsynth
