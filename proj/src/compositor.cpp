#include "toonsynth/compositor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "toonsynth/error.hpp"

namespace toonsynth {

int sample_subject_count(RngStream& rng, const SubjectCountPolicy& policy) {
  if (policy.min_subjects > policy.max_subjects || policy.max_subjects < 1) {
    throw InvalidArgument("subject count bounds are empty");
  }
  for (;;) {
    const int n = rng.poisson(policy.lambda);
    if (n >= policy.min_subjects && n <= policy.max_subjects) return n;
  }
}

std::string to_string(WarpKind k) {
  switch (k) {
    case WarpKind::None: return "none";
    case WarpKind::Grid: return "grid";
    case WarpKind::Rotation: return "rotation";
  }
  return "none";
}

WarpKind warp_kind_from_string(const std::string& s) {
  if (s == "none") return WarpKind::None;
  if (s == "grid") return WarpKind::Grid;
  if (s == "rotation") return WarpKind::Rotation;
  throw FormatError("unknown warp kind '" + s + "'");
}

AugmentRecord draw_augment(RngStream& rng, const AugmentPolicy& policy) {
  AugmentRecord r;
  r.flip = rng.bernoulli(policy.flip_probability);
  if (rng.bernoulli(policy.warp_probability)) {
    if (rng.bernoulli(policy.grid_probability)) {
      r.warp = WarpKind::Grid;
      r.grid = draw_grid_distortion(policy.grid_cells, policy.grid_limit_lo, policy.grid_limit_hi, rng);
    } else {
      r.warp = WarpKind::Rotation;
      r.rotation_deg = rng.uniform(-policy.max_rotation_deg, policy.max_rotation_deg);
    }
  }
  const double frac = rng.uniform(policy.long_side_min, policy.long_side_max);
  r.long_side = std::max(1, static_cast<int>(std::lround(frac * policy.canvas)));
  return r;
}

InstanceAsset apply_augment(const InstanceAsset& asset, const AugmentRecord& record) {
  if (asset.rgba.empty()) throw InvalidArgument("cannot augment an empty asset");
  ImageBuffer img = record.flip ? flip_horizontal(asset.rgba) : asset.rgba;
  switch (record.warp) {
    case WarpKind::Grid: img = warp_grid_distort(img, record.grid); break;
    case WarpKind::Rotation: img = warp_rotate(img, record.rotation_deg); break;
    case WarpKind::None: break;
  }
  const auto box = tight_box(alpha_mask(img));
  if (!box) throw EmptyForeground("augmentation left no opaque pixel in asset " + asset.provenance.asset_id);
  img = crop(img, static_cast<int>(box->x_min), static_cast<int>(box->y_min), static_cast<int>(box->width()),
             static_cast<int>(box->height()));
  if (record.long_side > 0) img = resize_long_side(img, record.long_side);

  InstanceAsset out;
  out.mask = alpha_mask(img);
  out.rgba = std::move(img);
  out.provenance = asset.provenance;
  return out;
}

AugmentedAsset augment(const InstanceAsset& asset, RngStream& rng, const AugmentPolicy& policy) {
  AugmentRecord record = draw_augment(rng, policy);
  return {apply_augment(asset, record), std::move(record)};
}

BackgroundCrop draw_background_crop(int bg_width, int bg_height, int canvas, RngStream& rng) {
  if (bg_width < 1 || bg_height < 1) throw InvalidArgument("background must be at least 1x1");
  if (canvas < 1) throw InvalidArgument("canvas must be positive");
  BackgroundCrop c;
  if (bg_width >= bg_height) {
    c.resized_height = canvas;
    c.resized_width = std::max(canvas, static_cast<int>(std::lround(static_cast<double>(bg_width) * canvas / bg_height)));
  } else {
    c.resized_width = canvas;
    c.resized_height = std::max(canvas, static_cast<int>(std::lround(static_cast<double>(bg_height) * canvas / bg_width)));
  }
  c.x = static_cast<int>(rng.uniform_int(0, c.resized_width - canvas));
  c.y = static_cast<int>(rng.uniform_int(0, c.resized_height - canvas));
  return c;
}

ImageBuffer apply_background_crop(const ImageBuffer& bg, const BackgroundCrop& crop_rect, int canvas) {
  ImageBuffer rgb = bg;
  if (bg.channels() != 3) {
    rgb = ImageBuffer(bg.width(), bg.height(), 3);
    for (int y = 0; y < bg.height(); ++y) {
      for (int x = 0; x < bg.width(); ++x) {
        for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = bg.at(x, y, bg.channels() == 1 ? 0 : c);
      }
    }
  }
  const ImageBuffer resized = resize_bilinear(rgb, crop_rect.resized_width, crop_rect.resized_height);
  return crop(resized, crop_rect.x, crop_rect.y, canvas, canvas);
}

CroppedBackground crop_background(const ImageBuffer& bg, RngStream& rng, int canvas) {
  const BackgroundCrop c = draw_background_crop(bg.width(), bg.height(), canvas, rng);
  return {apply_background_crop(bg, c, canvas), c};
}

// ---------------------------------------------------------------------------

IouWindow IouWindow::from_doubles(double lo, double hi) {
  if (!(lo >= 0.0 && lo <= hi && hi <= 1.0)) throw InvalidArgument("IoU window must satisfy 0 <= lo <= hi <= 1");
  return {static_cast<std::int64_t>(std::llround(lo * kDen)), static_cast<std::int64_t>(std::llround(hi * kDen))};
}

bool IouWindow::contains(std::int64_t inter, std::int64_t area_sum) const noexcept {
  const std::int64_t uni = area_sum - inter;
  return inter * kDen >= lo_num * uni && inter * kDen <= hi_num * uni;
}

namespace {

using i64 = std::int64_t;

i64 overlap_1d(i64 a0, i64 alen, i64 b0, i64 blen) {
  return std::max<i64>(0, std::min(a0 + alen, b0 + blen) - std::max(a0, b0));
}

BoundingBox int_box(i64 x, i64 y, i64 w, i64 h) {
  return {static_cast<double>(x), static_cast<double>(y), static_cast<double>(x + w), static_cast<double>(y + h)};
}

struct IntRect {
  i64 x, y, w, h;
};

// Uniform draw among positions whose IoU with `prev` lies in the window.
// Counts per column from a histogram of the row overlaps, so the cost is
// O(canvas + overlap range) rather than O(canvas^2).
std::optional<IntRect> place_against_previous(const IntRect& prev, i64 w, i64 h, i64 canvas,
                                              const IouWindow& win, RngStream& rng) {
  const i64 nx = canvas - w + 1, ny = canvas - h + 1;
  const i64 area_sum = prev.w * prev.h + w * h;
  const i64 den = IouWindow::kDen;
  // inter in [imin, imax] <=> IoU in window.
  const i64 imin = win.lo_num == 0 ? 0 : (win.lo_num * area_sum + (den + win.lo_num) - 1) / (den + win.lo_num);
  const i64 imax = (win.hi_num * area_sum) / (den + win.hi_num);

  const i64 max_iy = std::min(prev.h, h);
  std::vector<i64> iy_of(static_cast<std::size_t>(ny));
  std::vector<i64> prefix(static_cast<std::size_t>(max_iy) + 2, 0);  // prefix[v] = #rows with iy < v
  for (i64 y = 0; y < ny; ++y) {
    iy_of[static_cast<std::size_t>(y)] = overlap_1d(prev.y, prev.h, y, h);
    ++prefix[static_cast<std::size_t>(iy_of[static_cast<std::size_t>(y)]) + 1];
  }
  for (std::size_t v = 1; v < prefix.size(); ++v) prefix[v] += prefix[v - 1];

  auto rows_for = [&](i64 ix, i64& lo, i64& hi) {
    if (ix == 0) {
      lo = 0;
      hi = imin <= 0 ? max_iy : -1;
      return;
    }
    lo = std::max<i64>(0, (imin + ix - 1) / ix);
    hi = std::min<i64>(max_iy, imax / ix);
  };
  auto count_rows = [&](i64 lo, i64 hi) -> i64 {
    if (hi < lo) return 0;
    return prefix[static_cast<std::size_t>(hi) + 1] - prefix[static_cast<std::size_t>(lo)];
  };

  std::vector<i64> col_counts(static_cast<std::size_t>(nx));
  i64 total = 0;
  for (i64 x = 0; x < nx; ++x) {
    const i64 ix = overlap_1d(prev.x, prev.w, x, w);
    i64 lo, hi;
    rows_for(ix, lo, hi);
    // Every row with ix == 0 has inter == 0 regardless of iy.
    const i64 c = ix == 0 ? (imin <= 0 ? ny : 0) : count_rows(lo, hi);
    col_counts[static_cast<std::size_t>(x)] = c;
    total += c;
  }
  if (total == 0) return std::nullopt;

  i64 r = rng.uniform_int(0, total - 1);
  for (i64 x = 0; x < nx; ++x) {
    const i64 c = col_counts[static_cast<std::size_t>(x)];
    if (r >= c) {
      r -= c;
      continue;
    }
    const i64 ix = overlap_1d(prev.x, prev.w, x, w);
    for (i64 y = 0; y < ny; ++y) {
      if (!win.contains(ix * iy_of[static_cast<std::size_t>(y)], area_sum)) continue;
      if (r-- == 0) return IntRect{x, y, w, h};
    }
  }
  return std::nullopt;  // unreachable: counts and scan agree
}

std::optional<IntRect> place_against_all(const std::vector<IntRect>& prior, i64 w, i64 h, i64 canvas,
                                         const IouWindow& win, RngStream& rng) {
  const i64 nx = canvas - w + 1, ny = canvas - h + 1;
  auto feasible = [&](i64 x, i64 y) {
    for (const auto& p : prior) {
      const i64 inter = overlap_1d(p.x, p.w, x, w) * overlap_1d(p.y, p.h, y, h);
      if (!win.contains(inter, p.w * p.h + w * h)) return false;
    }
    return true;
  };
  i64 total = 0;
  for (i64 y = 0; y < ny; ++y) {
    for (i64 x = 0; x < nx; ++x) total += feasible(x, y);
  }
  if (total == 0) return std::nullopt;
  i64 r = rng.uniform_int(0, total - 1);
  for (i64 y = 0; y < ny; ++y) {
    for (i64 x = 0; x < nx; ++x) {
      if (feasible(x, y) && r-- == 0) return IntRect{x, y, w, h};
    }
  }
  return std::nullopt;
}

}  // namespace

SideBySideResult side_by_side_boxes(std::span<const Size2> sizes, RngStream& rng, const SideBySideParams& params) {
  SideBySideResult res;
  res.order.resize(sizes.size());
  std::iota(res.order.begin(), res.order.end(), std::size_t{0});
  if (params.shuffle_order) {
    for (std::size_t i = res.order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<i64>(i) - 1));
      std::swap(res.order[i - 1], res.order[j]);
    }
  }
  const i64 canvas = params.canvas;
  std::vector<IntRect> placed;
  for (std::size_t step = 0; step < res.order.size(); ++step) {
    const Size2 s = sizes[res.order[step]];
    if (s.width < 1 || s.height < 1) throw InvalidArgument("side_by_side: asset has no extent");
    if (s.width > canvas || s.height > canvas) {
      throw NoFeasiblePosition("asset of " + std::to_string(s.width) + "x" + std::to_string(s.height) +
                               " does not fit inside the canvas");
    }
    std::optional<IntRect> r;
    if (placed.empty()) {
      r = IntRect{rng.uniform_int(0, canvas - s.width), rng.uniform_int(0, canvas - s.height), s.width, s.height};
    } else if (params.constraint == SideBySideConstraint::Previous) {
      r = place_against_previous(placed.back(), s.width, s.height, canvas, params.window, rng);
    } else {
      r = place_against_all(placed, s.width, s.height, canvas, params.window, rng);
    }
    if (!r) {
      throw NoFeasiblePosition("no position satisfies the IoU window for placement " + std::to_string(step));
    }
    placed.push_back(*r);
    res.boxes.push_back(int_box(r->x, r->y, r->w, r->h));
  }
  return res;
}

std::vector<std::size_t> match_guide_boxes(std::span<const Size2> assets, std::span<const BoundingBox> guides) {
  if (guides.size() < assets.size()) {
    throw InsufficientGuides("need " + std::to_string(assets.size()) + " guide boxes, have " +
                             std::to_string(guides.size()));
  }
  std::vector<bool> taken(guides.size(), false);
  std::vector<std::size_t> out;
  out.reserve(assets.size());
  for (const Size2& a : assets) {
    if (a.width < 1 || a.height < 1) throw InvalidArgument("photo_guided: asset has no extent");
    const double la = std::log(static_cast<double>(a.width) / a.height);
    std::size_t best = guides.size();
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < guides.size(); ++b) {
      if (taken[b]) continue;
      if (!guides[b].valid()) throw InvalidArgument("photo_guided: degenerate guide box");
      const double cost = std::fabs(la - std::log(guides[b].aspect()));
      if (cost < best_cost) {
        best_cost = cost;
        best = b;
      }
    }
    taken[best] = true;
    out.push_back(best);
  }
  return out;
}

std::vector<BoundingBox> photo_guided_boxes(std::span<const Size2> assets, std::span<const BoundingBox> guides,
                                            int long_side_cap, std::vector<std::size_t>* assignment) {
  const auto match = match_guide_boxes(assets, guides);
  std::vector<BoundingBox> out;
  for (std::size_t i = 0; i < assets.size(); ++i) {
    const BoundingBox& g = guides[match[i]];
    const double aw = assets[i].width, ah = assets[i].height;
    double s = std::min(g.width() / aw, g.height() / ah);
    if (long_side_cap > 0 && s * std::max(aw, ah) > long_side_cap) s = long_side_cap / std::max(aw, ah);
    const int w = std::max(1, static_cast<int>(std::lround(aw * s)));
    const int h = std::max(1, static_cast<int>(std::lround(ah * s)));
    const double x = std::floor(g.center_x() - w / 2.0 + 0.5);
    const double y = std::floor(g.center_y() - h / 2.0 + 0.5);
    out.push_back({x, y, x + w, y + h});
  }
  if (assignment) *assignment = match;
  return out;
}

namespace {

std::vector<Size2> sizes_of(std::span<const AugmentedAsset> assets) {
  std::vector<Size2> sizes;
  for (const auto& a : assets) sizes.push_back({a.asset.rgba.width(), a.asset.rgba.height()});
  return sizes;
}

}  // namespace

std::vector<Placement> photo_guided_placement(std::span<const AugmentedAsset> assets,
                                              std::span<const BoundingBox> guide_boxes, int long_side_cap) {
  const auto sizes = sizes_of(assets);
  std::vector<std::size_t> match;
  const auto boxes = photo_guided_boxes(sizes, guide_boxes, long_side_cap, &match);
  std::vector<Placement> out;
  for (std::size_t i = 0; i < assets.size(); ++i) {
    out.push_back({assets[i].asset.provenance.asset_id, assets[i].record, boxes[i], static_cast<int>(i),
                   guide_boxes[match[i]]});
  }
  return out;
}

std::vector<Placement> side_by_side_placement(std::span<const AugmentedAsset> assets, RngStream& rng,
                                              const SideBySideParams& params) {
  const auto sizes = sizes_of(assets);
  const SideBySideResult r = side_by_side_boxes(sizes, rng, params);
  std::vector<Placement> out;
  for (std::size_t step = 0; step < r.order.size(); ++step) {
    const auto& a = assets[r.order[step]];
    out.push_back({a.asset.provenance.asset_id, a.record, r.boxes[step], static_cast<int>(step), std::nullopt});
  }
  return out;
}

std::string to_string(Strategy s) { return s == Strategy::PhotoGuided ? "photo_guided" : "side_by_side"; }

Strategy strategy_from_string(const std::string& s) {
  if (s == "photo_guided") return Strategy::PhotoGuided;
  if (s == "side_by_side") return Strategy::SideBySide;
  throw FormatError("unknown placement strategy '" + s + "'");
}

std::string to_string(HarmonizeMode m) {
  switch (m) {
    case HarmonizeMode::None: return "none";
    case HarmonizeMode::Quantize: return "quantize";
    case HarmonizeMode::HistogramMatch: return "histogram_match";
  }
  return "none";
}

HarmonizeMode harmonize_mode_from_string(const std::string& s) {
  if (s == "none") return HarmonizeMode::None;
  if (s == "quantize") return HarmonizeMode::Quantize;
  if (s == "histogram_match") return HarmonizeMode::HistogramMatch;
  throw FormatError("unknown harmonization mode '" + s + "'");
}

// ---------------------------------------------------------------------------

AssetPools::AssetPools(std::vector<InstanceAsset> foregrounds, std::vector<Background> backgrounds)
    : foregrounds_(std::move(foregrounds)), backgrounds_(std::move(backgrounds)) {
  for (std::size_t i = 0; i < foregrounds_.size(); ++i) {
    if (!fg_index_.emplace(foregrounds_[i].provenance.asset_id, i).second) {
      throw InvalidArgument("duplicate asset id '" + foregrounds_[i].provenance.asset_id + "'");
    }
  }
  for (std::size_t i = 0; i < backgrounds_.size(); ++i) {
    if (!bg_index_.emplace(backgrounds_[i].id, i).second) {
      throw InvalidArgument("duplicate background id '" + backgrounds_[i].id + "'");
    }
  }
}

const InstanceAsset& AssetPools::foreground(const std::string& id) const {
  const auto it = fg_index_.find(id);
  if (it == fg_index_.end()) throw InvalidArgument("unknown asset id '" + id + "'");
  return foregrounds_[it->second];
}

const Background& AssetPools::background(const std::string& id) const {
  const auto it = bg_index_.find(id);
  if (it == bg_index_.end()) throw InvalidArgument("unknown background id '" + id + "'");
  return backgrounds_[it->second];
}

AnnotatedSample rasterize(const SceneLayout& layout, const AssetPools& pools,
                          const std::vector<InstanceAsset>* augmented) {
  if (layout.placements.empty()) throw InvalidArgument("layout has no placements");
  if (augmented && augmented->size() != layout.placements.size()) {
    throw InvalidArgument("augmented asset list does not match the placements");
  }
  const int canvas = layout.canvas;
  AnnotatedSample sample;
  sample.image = apply_background_crop(pools.background(layout.background_id).image, layout.background_crop, canvas);

  std::vector<std::size_t> by_z(layout.placements.size());
  std::iota(by_z.begin(), by_z.end(), std::size_t{0});
  std::stable_sort(by_z.begin(), by_z.end(),
                   [&](std::size_t a, std::size_t b) { return layout.placements[a].z < layout.placements[b].z; });
  for (std::size_t i = 1; i < by_z.size(); ++i) {
    if (layout.placements[by_z[i]].z == layout.placements[by_z[i - 1]].z) {
      throw InvalidArgument("placement z values must be unique");
    }
  }

  std::vector<BinaryMask> amodal;
  std::vector<std::string> ids;
  for (std::size_t idx : by_z) {
    const Placement& p = layout.placements[idx];
    InstanceAsset asset = augmented ? (*augmented)[idx] : apply_augment(pools.foreground(p.asset_id), p.transform);
    const int tw = static_cast<int>(p.target_box.width()), th = static_cast<int>(p.target_box.height());
    if (tw < 1 || th < 1) throw InvalidArgument("placement target box has no extent");
    if (asset.rgba.width() != tw || asset.rgba.height() != th) asset.rgba = resize_bilinear(asset.rgba, tw, th);

    const int x0 = static_cast<int>(p.target_box.x_min), y0 = static_cast<int>(p.target_box.y_min);
    BinaryMask mask(canvas, canvas);
    const int ys = std::max(0, y0), ye = std::min(canvas, y0 + th);
    const int xs = std::max(0, x0), xe = std::min(canvas, x0 + tw);
    for (int y = ys; y < ye; ++y) {
      for (int x = xs; x < xe; ++x) {
        const auto src = asset.rgba.pixel(x - x0, y - y0);
        const float a = src[3];
        if (a <= 0.0f) continue;
        auto dst = sample.image.pixel(x, y);
        for (int c = 0; c < 3; ++c) dst[c] = a * src[c] + (1.0f - a) * dst[c];
        if (a > 0.5f) mask.set(x, y, true);
      }
    }
    amodal.push_back(std::move(mask));
    ids.push_back(p.asset_id);
  }
  quantize_to_u8_levels(sample.image);

  // Walk from the top so `cover` is the union of every higher-z amodal mask.
  std::vector<AnnotatedInstance> kept;
  BinaryMask cover(canvas, canvas);
  for (std::size_t i = amodal.size(); i-- > 0;) {
    BinaryMask modal = amodal[i];
    modal.subtract(cover);
    cover |= amodal[i];
    const auto box = tight_box(modal);
    if (!box) continue;
    kept.push_back({std::move(modal), amodal[i], *box, ids[i]});
  }
  std::reverse(kept.begin(), kept.end());
  sample.instances = std::move(kept);
  return sample;
}

}  // namespace toonsynth
