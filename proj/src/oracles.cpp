#include "toonsynth/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace toonsynth::oracle {

std::vector<std::int64_t> distance_sq(const BinaryMask& mask, Border border) {
  const int w = mask.width(), h = mask.height();
  const std::int64_t none = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> out(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      std::int64_t best = none;
      for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
          if (mask.at(u, v)) continue;
          const std::int64_t dx = u - x, dy = v - y;
          best = std::min(best, dx * dx + dy * dy);
        }
      }
      if (border == Border::Exterior) {
        for (std::int64_t e : {x + 1, w - x, y + 1, h - y}) best = std::min(best, e * e);
      }
      out[static_cast<std::size_t>(y) * w + x] = best;
    }
  }
  return out;
}

BinaryMask boundary_band(const BinaryMask& mask, int d) {
  const auto dist = distance_sq(mask, Border::Exterior);
  BinaryMask band(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y) && dist[static_cast<std::size_t>(y) * mask.width() + x] <= std::int64_t{d} * d) {
        band.set(x, y, true);
      }
    }
  }
  return band;
}

Ratio mask_iou(const BinaryMask& g, const BinaryMask& p) {
  Ratio r;
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      r.num += g.at(x, y) && p.at(x, y);
      r.den += g.at(x, y) || p.at(x, y);
    }
  }
  return r;
}

Ratio boundary_iou(const BinaryMask& g, const BinaryMask& p, int d) {
  return mask_iou(boundary_band(g, d), boundary_band(p, d));
}

double raster_giou(const BoundingBox& a, const BoundingBox& b) {
  const int x0 = static_cast<int>(std::min(a.x_min, b.x_min)), x1 = static_cast<int>(std::max(a.x_max, b.x_max));
  const int y0 = static_cast<int>(std::min(a.y_min, b.y_min)), y1 = static_cast<int>(std::max(a.y_max, b.y_max));
  double ia = 0, ib = 0, both = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      const bool in_a = cx > a.x_min && cx < a.x_max && cy > a.y_min && cy < a.y_max;
      const bool in_b = cx > b.x_min && cx < b.x_max && cy > b.y_min && cy < b.y_max;
      ia += in_a;
      ib += in_b;
      both += in_a && in_b;
    }
  }
  const double uni = ia + ib - both;
  const double hull = static_cast<double>(x1 - x0) * (y1 - y0);
  return both / uni - (hull - uni) / hull;
}

double qfl_scalar(double y, double sigma, double beta, double eps) {
  const double s = std::min(std::max(sigma, eps), 1.0 - eps);
  return std::pow(std::abs(y - s), beta) * -((1.0 - y) * std::log(1.0 - s) + y * std::log(s));
}

double ppa_literal(const std::vector<double>& p, const std::vector<double>& g, int h, int w, int pool, double gain,
                   double eps) {
  const int r = pool / 2;
  double sw = 0, sbce = 0, si = 0, su = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int v = y - r; v <= y + r; ++v) {
        for (int u = x - r; u <= x + r; ++u) {
          if (u >= 0 && u < w && v >= 0 && v < h) acc += g[static_cast<std::size_t>(v) * w + u];
        }
      }
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double weight = 1.0 + gain * std::abs(acc / (pool * pool) - g[i]);
      const double q = std::min(std::max(p[i], eps), 1.0 - eps);
      sw += weight;
      sbce += weight * -(g[i] * std::log(q) + (1 - g[i]) * std::log(1 - q));
      si += weight * q * g[i];
      su += weight * (q + g[i] - q * g[i]);
    }
  }
  return sbce / sw + 1.0 - si / su;
}

std::vector<std::size_t> guided_assignment(std::span<const double> asset_aspects, std::span<const double> box_aspects) {
  const std::size_t n = asset_aspects.size(), m = box_aspects.size();
  std::vector<std::size_t> boxes(m);
  std::iota(boxes.begin(), boxes.end(), std::size_t{0});
  std::vector<std::size_t> best;
  std::vector<double> best_key;
  // Enumerate ordered selections via permutations of all boxes; the prefix of
  // length n is the assignment.
  do {
    std::vector<double> key;
    for (std::size_t i = 0; i < n; ++i) {
      key.push_back(std::abs(std::log(asset_aspects[i]) - std::log(box_aspects[boxes[i]])));
      key.push_back(static_cast<double>(boxes[i]));
    }
    if (best.empty() || key < best_key) {
      best_key = key;
      best.assign(boxes.begin(), boxes.begin() + static_cast<std::ptrdiff_t>(n));
    }
  } while (std::next_permutation(boxes.begin(), boxes.end()));
  return best;
}

std::vector<std::size_t> greedy_assignment(std::span<const BoundingBox> decoded, std::span<const BoundingBox> gts,
                                           double input_size, double center_weight) {
  std::vector<std::vector<double>> cost(gts.size(), std::vector<double>(decoded.size()));
  for (std::size_t g = 0; g < gts.size(); ++g) {
    for (std::size_t c = 0; c < decoded.size(); ++c) {
      const auto& a = decoded[c];
      const auto& b = gts[g];
      const double iw = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
      const double ih = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
      const double inter = iw * ih;
      const double uni = (a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter;
      const double v = uni > 0 ? inter / uni : 0.0;
      const double dx = (a.x_min + a.x_max) / 2 - (b.x_min + b.x_max) / 2;
      const double dy = (a.y_min + a.y_max) / 2 - (b.y_min + b.y_max) / 2;
      cost[g][c] = -v + center_weight * std::sqrt(dx * dx + dy * dy) / input_size;
    }
  }
  std::vector<std::size_t> order(gts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return (gts[a].x_max - gts[a].x_min) * (gts[a].y_max - gts[a].y_min) >
           (gts[b].x_max - gts[b].x_min) * (gts[b].y_max - gts[b].y_min);
  });
  std::vector<bool> used(decoded.size(), false);
  std::vector<std::size_t> out(gts.size());
  for (std::size_t g : order) {
    std::size_t arg = decoded.size();
    for (std::size_t c = 0; c < decoded.size(); ++c) {
      if (!used[c] && (arg == decoded.size() || cost[g][c] < cost[g][arg])) arg = c;
    }
    used[arg] = true;
    out[g] = arg;
  }
  return out;
}

double best_two_partition_sse(std::span<const std::array<double, 3>> points) {
  const std::size_t n = points.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t bits = 1; bits + 1 < (std::uint64_t{1} << n); ++bits) {
    double sse = 0;
    for (int side = 0; side < 2; ++side) {
      std::array<double, 3> mean{};
      double cnt = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (((bits >> i) & 1) != static_cast<std::uint64_t>(side)) continue;
        for (int c = 0; c < 3; ++c) mean[c] += points[i][c];
        ++cnt;
      }
      for (auto& m : mean) m /= cnt;
      for (std::size_t i = 0; i < n; ++i) {
        if (((bits >> i) & 1) != static_cast<std::uint64_t>(side)) continue;
        for (int c = 0; c < 3; ++c) sse += (points[i][c] - mean[c]) * (points[i][c] - mean[c]);
      }
    }
    best = std::min(best, sse);
  }
  return best;
}

double central_difference(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                          std::size_t i, double h) {
  const double x0 = x[i];
  x[i] = x0 + h;
  const double fp = f(x);
  x[i] = x0 - h;
  const double fm = f(x);
  return (fp - fm) / (2 * h);
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  double na = 0, nb = 0, nd = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] * a[i];
    nb += b[i] * b[i];
    nd += (a[i] - b[i]) * (a[i] - b[i]);
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0 ? 0.0 : std::sqrt(nd) / scale;
}

BinaryMask random_mask(RngStream& rng, int w, int h, double density) {
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.set(x, y, rng.uniform() < density);
  }
  return m;
}

BinaryMask random_shape_mask(RngStream& rng, int w, int h) {
  BinaryMask m(w, h);
  const int shapes = static_cast<int>(rng.uniform_int(0, 4));
  for (int s = 0; s < shapes; ++s) {
    const bool disc = rng.bernoulli(0.5);
    const double cx = rng.uniform(0, w), cy = rng.uniform(0, h);
    const double rx = rng.uniform(1, w / 2.0), ry = rng.uniform(1, h / 2.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double u = (x + 0.5 - cx) / rx, v = (y + 0.5 - cy) / ry;
        if (disc ? u * u + v * v <= 1 : std::abs(u) <= 1 && std::abs(v) <= 1) m.set(x, y, true);
      }
    }
  }
  if (rng.bernoulli(0.3)) {  // scattered specks
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (rng.uniform() < 0.05) m.set(x, y, !m.at(x, y));
      }
    }
  }
  return m;
}

}  // namespace toonsynth::oracle
