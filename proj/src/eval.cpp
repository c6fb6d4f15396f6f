#include "toonsynth/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "toonsynth/error.hpp"
#include "toonsynth/imaging/distance.hpp"

namespace toonsynth {

int boundary_distance(int width, int height, double fraction) {
  const double diag = std::sqrt(static_cast<double>(width) * width + static_cast<double>(height) * height);
  return std::max(1, static_cast<int>(std::lround(fraction * diag)));
}

BinaryMask boundary_band(const BinaryMask& mask, int d) {
  if (d < 1) throw InvalidArgument("boundary band width must be >= 1");
  const auto sq = squared_distance_to_complement(mask, Border::Exterior);
  const double limit = static_cast<double>(d) * d;
  BinaryMask band(mask.width(), mask.height());
  auto bits = band.bits();
  const auto src = mask.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = src[i] && sq[i] <= limit ? 1 : 0;
  return band;
}

namespace {

void require_same_shape(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) {
    throw InvalidArgument("mask dimensions differ: " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                          " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

double count_iou(const BinaryMask& a, const BinaryMask& b) {
  const auto x = a.bits();
  const auto y = b.bits();
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    inter += x[i] & y[i];
    uni += x[i] | y[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

double mask_iou(const BinaryMask& g, const BinaryMask& p) {
  require_same_shape(g, p);
  return count_iou(g, p);
}

double boundary_iou(const BinaryMask& g, const BinaryMask& p, int d) {
  require_same_shape(g, p);
  return count_iou(boundary_band(g, d), boundary_band(p, d));
}

double boundary_iou(const BinaryMask& g, const BinaryMask& p) {
  return boundary_iou(g, p, boundary_distance(g.width(), g.height()));
}

std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back((50.0 + 5.0 * i) / 100.0);
  return t;
}

std::string to_string(IouKind k) {
  switch (k) {
    case IouKind::Box: return "Box AP";
    case IouKind::Mask: return "Mask AP";
    case IouKind::Boundary: return "Boundary AP";
  }
  return "";
}

ApResult average_precision(std::span<const ImageIous> images, const ApOptions& options) {
  ApResult res;
  res.thresholds = options.thresholds;
  std::size_t npos = 0;
  for (const auto& im : images) npos += im.num_gt;

  for (std::size_t t = 0; t < options.thresholds.size(); ++t) {
    const double thr = options.thresholds[t];
    std::vector<std::pair<double, bool>> flags;
    for (const auto& im : images) {
      const std::size_t nd = im.scores.size();
      std::vector<bool> taken(im.num_gt, false);
      ImageMatches matches{im.image_id, im.num_gt, nd, {}};
      for (std::size_t d = 0; d < nd; ++d) {
        std::size_t best = im.num_gt;
        double best_iou = thr;
        for (std::size_t g = 0; g < im.num_gt; ++g) {
          if (taken[g]) continue;
          const double v = im.iou[d * im.num_gt + g];
          if (v >= thr && (best == im.num_gt || v > best_iou)) {
            best = g;
            best_iou = v;
          }
        }
        const bool tp = best != im.num_gt;
        if (tp) {
          taken[best] = true;
          matches.pairs.push_back({im.det_index.empty() ? d : im.det_index[d], best, best_iou});
        }
        flags.emplace_back(im.scores[d], tp);
      }
      if (t == 0) res.per_image.push_back(std::move(matches));
    }
    if (npos == 0) {
      res.per_threshold.push_back(0.0);
      continue;
    }
    std::stable_sort(flags.begin(), flags.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<double> recall(flags.size()), precision(flags.size());
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < flags.size(); ++i) {
      (flags[i].second ? tp : fp) += 1;
      recall[i] = static_cast<double>(tp) / static_cast<double>(npos);
      precision[i] = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
    double sum = 0.0;
    const int rp = options.recall_points;
    for (int j = 0; j < rp; ++j) {
      const double r = static_cast<double>(j) / (rp - 1);
      const auto idx = static_cast<std::size_t>(std::lower_bound(recall.begin(), recall.end(), r) - recall.begin());
      sum += idx < precision.size() ? precision[idx] : 0.0;
    }
    res.per_threshold.push_back(sum / rp);
  }
  res.mean = res.per_threshold.empty()
                 ? 0.0
                 : std::accumulate(res.per_threshold.begin(), res.per_threshold.end(), 0.0) /
                       static_cast<double>(res.per_threshold.size());
  return res;
}

namespace {

struct Grouped {
  std::int64_t image_id;
  std::vector<std::size_t> dets;  // sorted by descending score, truncated
  std::vector<std::size_t> gts;
};

std::vector<Grouped> group(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                           std::size_t max_dets) {
  std::map<std::int64_t, Grouped> by_id;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    auto& g = by_id.try_emplace(gts[i].image_id, Grouped{gts[i].image_id, {}, {}}).first->second;
    g.gts.push_back(i);
  }
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (!std::isfinite(dets[i].score)) throw InvalidArgument("detection score is not finite");
    auto& g = by_id.try_emplace(dets[i].image_id, Grouped{dets[i].image_id, {}, {}}).first->second;
    g.dets.push_back(i);
  }
  std::vector<Grouped> out;
  for (auto& [id, g] : by_id) {
    std::stable_sort(g.dets.begin(), g.dets.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
    if (g.dets.size() > max_dets) g.dets.resize(max_dets);
    out.push_back(std::move(g));
  }
  return out;
}

ImageIous matrix_header(const Grouped& g, std::span<const Detection> dets) {
  ImageIous m;
  m.image_id = g.image_id;
  m.det_index = g.dets;
  for (std::size_t d : g.dets) m.scores.push_back(dets[d].score);
  m.num_gt = g.gts.size();
  m.iou.assign(g.dets.size() * g.gts.size(), 0.0);
  return m;
}

const BinaryMask& mask_of(const std::optional<BinaryMask>& m) {
  if (!m) throw InvalidArgument("mask-based AP needs a mask on every detection and ground truth");
  return *m;
}

}  // namespace

ApResult average_precision(std::span<const Detection> dets, std::span<const GroundTruth> gts, const IouFn& iou_fn,
                           const ApOptions& options) {
  const auto groups = group(dets, gts, options.max_detections);
  std::vector<ImageIous> mats;
  for (const auto& g : groups) {
    ImageIous m = matrix_header(g, dets);
    for (std::size_t d = 0; d < g.dets.size(); ++d) {
      for (std::size_t k = 0; k < g.gts.size(); ++k) m.iou[d * m.num_gt + k] = iou_fn(dets[g.dets[d]], gts[g.gts[k]]);
    }
    mats.push_back(std::move(m));
  }
  return average_precision(mats, options);
}

ApResult average_precision(std::span<const Detection> dets, std::span<const GroundTruth> gts, IouKind kind,
                           const ApOptions& options) {
  const auto groups = group(dets, gts, options.max_detections);
  std::vector<ImageIous> mats(groups.size());
  const auto n = static_cast<std::int64_t>(groups.size());
  // Errors inside the parallel region are captured and rethrown afterwards.
  std::vector<std::string> errors(groups.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const Grouped& g = groups[static_cast<std::size_t>(i)];
    try {
      ImageIous m = matrix_header(g, dets);
      std::vector<BinaryMask> gm, dm;
      if (kind != IouKind::Box) {
        for (std::size_t k : g.gts) gm.push_back(mask_of(gts[k].mask));
        for (std::size_t d : g.dets) dm.push_back(mask_of(dets[d].mask));
        for (const auto& x : gm) require_same_shape(gm.front(), x);
        for (const auto& x : dm) {
          if (!gm.empty()) require_same_shape(gm.front(), x);
        }
        if (kind == IouKind::Boundary && !gm.empty()) {
          const int dist = boundary_distance(gm.front().width(), gm.front().height());
          for (auto& x : gm) x = boundary_band(x, dist);
          for (auto& x : dm) x = boundary_band(x, dist);
        }
      }
      for (std::size_t d = 0; d < g.dets.size(); ++d) {
        for (std::size_t k = 0; k < g.gts.size(); ++k) {
          m.iou[d * m.num_gt + k] = kind == IouKind::Box ? iou(dets[g.dets[d]].box, gts[g.gts[k]].box)
                                                         : count_iou(gm[k], dm[d]);
        }
      }
      mats[static_cast<std::size_t>(i)] = std::move(m);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw InvalidArgument(e);
  }
  return average_precision(mats, options);
}

EvalReport evaluate(std::span<const Detection> dets, std::span<const GroundTruth> gts, const ApOptions& options) {
  EvalReport r;
  r.box = average_precision(dets, gts, IouKind::Box, options);
  const bool masks = std::all_of(dets.begin(), dets.end(), [](const auto& d) { return d.mask.has_value(); }) &&
                     std::all_of(gts.begin(), gts.end(), [](const auto& g) { return g.mask.has_value(); });
  if (masks) {
    r.mask = average_precision(dets, gts, IouKind::Mask, options);
    r.boundary = average_precision(dets, gts, IouKind::Boundary, options);
  }
  return r;
}

std::string eval_report_json(const EvalReport& report, const ApOptions& options) {
  using nlohmann::ordered_json;
  ordered_json j;
  auto headline = [](const std::optional<ApResult>& r) { return r ? ordered_json(r->mean) : ordered_json(nullptr); };
  j["Box AP"] = report.box.mean;
  j["Mask AP"] = headline(report.mask);
  j["Boundary AP"] = headline(report.boundary);
  j["protocol"] = {{"iou_thresholds", options.thresholds},
                   {"recall_points", options.recall_points},
                   {"max_detections", options.max_detections},
                   {"matching", "greedy by descending score, highest IoU >= threshold"},
                   {"note", "COCO default conventions"}};
  ordered_json per;
  per["Box AP"] = report.box.per_threshold;
  if (report.mask) per["Mask AP"] = report.mask->per_threshold;
  if (report.boundary) per["Boundary AP"] = report.boundary->per_threshold;
  j["per_threshold"] = per;

  auto pairs = [](const ImageMatches& m) {
    ordered_json a = ordered_json::array();
    for (const auto& p : m.pairs) a.push_back({{"detection", p.detection}, {"ground_truth", p.ground_truth}, {"iou", p.iou}});
    return a;
  };
  ordered_json images = ordered_json::array();
  for (std::size_t i = 0; i < report.box.per_image.size(); ++i) {
    const auto& b = report.box.per_image[i];
    ordered_json e{{"image_id", b.image_id}, {"num_gt", b.num_gt}, {"num_det", b.num_det}, {"box_matches", pairs(b)}};
    if (report.mask) e["mask_matches"] = pairs(report.mask->per_image[i]);
    if (report.boundary) e["boundary_matches"] = pairs(report.boundary->per_image[i]);
    images.push_back(std::move(e));
  }
  j["per_image"] = images;
  return j.dump(2);
}

}  // namespace toonsynth
