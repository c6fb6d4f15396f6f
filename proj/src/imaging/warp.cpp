#include "toonsynth/imaging/warp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "toonsynth/error.hpp"

namespace toonsynth {

namespace {

// Bilinear fetch at continuous source coordinate (sx, sy) in pixel-index
// space (pixel centers at integers). Out-of-image taps are transparent.
// Writes straight (non-premultiplied) RGBA into dst.
void sample_rgba_transparent(const ImageBuffer& src, double sx, double sy, std::span<float> dst) {
  const double fx0 = std::floor(sx), fy0 = std::floor(sy);
  const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
  const double ax = sx - fx0, ay = sy - fy0;
  const int w = src.width(), h = src.height();

  if (ax == 0.0 && ay == 0.0) {
    if (x0 >= 0 && y0 >= 0 && x0 < w && y0 < h) {
      const auto p = src.pixel(x0, y0);
      std::copy(p.begin(), p.end(), dst.begin());
    } else {
      std::fill(dst.begin(), dst.end(), 0.0f);
    }
    return;
  }

  std::array<double, 4> acc{0.0, 0.0, 0.0, 0.0};
  const std::array<double, 4> wts{(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
  const std::array<int, 4> xs{x0, x0 + 1, x0, x0 + 1};
  const std::array<int, 4> ys{y0, y0, y0 + 1, y0 + 1};
  for (int i = 0; i < 4; ++i) {
    if (wts[i] == 0.0 || xs[i] < 0 || ys[i] < 0 || xs[i] >= w || ys[i] >= h) continue;
    const auto p = src.pixel(xs[i], ys[i]);
    const double a = p[3] * wts[i];
    acc[0] += p[0] * a;
    acc[1] += p[1] * a;
    acc[2] += p[2] * a;
    acc[3] += a;
  }
  if (acc[3] <= 0.0) {
    std::fill(dst.begin(), dst.end(), 0.0f);
    return;
  }
  for (int c = 0; c < 3; ++c) dst[c] = static_cast<float>(std::clamp(acc[c] / acc[3], 0.0, 1.0));
  dst[3] = static_cast<float>(std::clamp(acc[3], 0.0, 1.0));
}

}  // namespace

ImageBuffer resize_bilinear(const ImageBuffer& img, int new_width, int new_height) {
  if (img.empty()) throw InvalidArgument("resize of an empty image");
  if (new_width < 1 || new_height < 1) throw InvalidArgument("resize target must be >= 1 px");
  if (new_width == img.width() && new_height == img.height()) return img;

  const int ch = img.channels();
  const bool rgba = ch == 4;
  ImageBuffer out(new_width, new_height, ch);
  const double sx_scale = static_cast<double>(img.width()) / new_width;
  const double sy_scale = static_cast<double>(img.height()) / new_height;
  const int w = img.width(), h = img.height();

#pragma omp parallel for schedule(static)
  for (int y = 0; y < new_height; ++y) {
    const double sy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, static_cast<double>(h - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, h - 1);
    const double ay = sy - y0;
    for (int x = 0; x < new_width; ++x) {
      const double sx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, static_cast<double>(w - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, w - 1);
      const double ax = sx - x0;
      const double w00 = (1 - ax) * (1 - ay), w10 = ax * (1 - ay), w01 = (1 - ax) * ay, w11 = ax * ay;
      const auto p00 = img.pixel(x0, y0), p10 = img.pixel(x1, y0);
      const auto p01 = img.pixel(x0, y1), p11 = img.pixel(x1, y1);
      auto dst = out.pixel(x, y);
      if (rgba) {
        const double a00 = w00 * p00[3], a10 = w10 * p10[3], a01 = w01 * p01[3], a11 = w11 * p11[3];
        const double a = a00 + a10 + a01 + a11;
        for (int c = 0; c < 3; ++c) {
          const double v = a00 * p00[c] + a10 * p10[c] + a01 * p01[c] + a11 * p11[c];
          dst[c] = a > 0.0 ? static_cast<float>(std::clamp(v / a, 0.0, 1.0)) : 0.0f;
        }
        dst[3] = static_cast<float>(std::clamp(a, 0.0, 1.0));
      } else {
        for (int c = 0; c < ch; ++c) {
          const double v = w00 * p00[c] + w10 * p10[c] + w01 * p01[c] + w11 * p11[c];
          dst[c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    }
  }
  return out;
}

ImageBuffer resize_long_side(const ImageBuffer& img, int target) {
  if (img.empty()) throw InvalidArgument("resize_long_side: empty asset");
  if (target < 1) throw InvalidArgument("resize_long_side: target must be >= 1");
  const int w = img.width(), h = img.height();
  int nw, nh;
  if (w >= h) {
    nw = target;
    nh = std::max(1, static_cast<int>(std::lround(static_cast<double>(h) * target / w)));
  } else {
    nh = target;
    nw = std::max(1, static_cast<int>(std::lround(static_cast<double>(w) * target / h)));
  }
  return resize_bilinear(img, nw, nh);
}

ImageBuffer flip_horizontal(const ImageBuffer& img) {
  ImageBuffer out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto src = img.pixel(img.width() - 1 - x, y);
      std::copy(src.begin(), src.end(), out.pixel(x, y).begin());
    }
  }
  return out;
}

ImageBuffer warp_rotate(const ImageBuffer& rgba, double degrees) {
  if (rgba.channels() != 4) throw InvalidArgument("warp_rotate expects an RGBA asset");
  if (rgba.empty()) return rgba;

  double c, s;
  const double quarter = degrees / 90.0;
  if (quarter == std::floor(quarter)) {
    // Exact lattice rotation for multiples of 90 degrees.
    const int q = ((static_cast<int>(std::fmod(quarter, 4.0)) % 4) + 4) % 4;
    static constexpr std::array<double, 4> cs{1, 0, -1, 0};
    static constexpr std::array<double, 4> sn{0, 1, 0, -1};
    c = cs[q];
    s = sn[q];
    if (q == 0) return rgba;
  } else {
    const double rad = degrees * std::numbers::pi / 180.0;
    c = std::cos(rad);
    s = std::sin(rad);
  }

  const double w = rgba.width(), h = rgba.height();
  const int out_w = std::max(1, static_cast<int>(std::ceil(std::fabs(w * c) + std::fabs(h * s) - 1e-9)));
  const int out_h = std::max(1, static_cast<int>(std::ceil(std::fabs(w * s) + std::fabs(h * c) - 1e-9)));
  ImageBuffer out(out_w, out_h, 4);
  const double ocx = out_w / 2.0, ocy = out_h / 2.0;
  const double icx = w / 2.0, icy = h / 2.0;

#pragma omp parallel for schedule(static)
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const double px = x + 0.5 - ocx, py = y + 0.5 - ocy;
      // Inverse of the on-screen counter-clockwise rotation (y axis points down).
      const double sx = c * px - s * py + icx - 0.5;
      const double sy = s * px + c * py + icy - 0.5;
      sample_rgba_transparent(rgba, sx, sy, out.pixel(x, y));
    }
  }
  return out;
}

GridDistortion draw_grid_distortion(int cells, double lo, double hi, RngStream& rng) {
  if (cells < 1) throw InvalidArgument("grid distortion needs at least one cell");
  if (lo > hi) throw InvalidArgument("grid distortion limit requires lo <= hi");
  if (lo <= -1.0) throw InvalidArgument("grid distortion limit must stay above -1");
  GridDistortion g;
  g.cells = cells;
  for (int i = 0; i < cells; ++i) g.x_scales.push_back(1.0 + rng.uniform(lo, hi));
  for (int i = 0; i < cells; ++i) g.y_scales.push_back(1.0 + rng.uniform(lo, hi));
  return g;
}

namespace {

struct AxisMap {
  int out_size;
  std::vector<double> src_edges;  // cells + 1 source boundaries
  std::vector<double> out_edges;  // cells + 1 output boundaries
  std::vector<double> scales;

  // Source pixel-index coordinate for output pixel center index i.
  double source_of(int i) const {
    const double o = i + 0.5;
    std::size_t k = static_cast<std::size_t>(
        std::upper_bound(out_edges.begin(), out_edges.end(), o) - out_edges.begin());
    k = std::clamp<std::size_t>(k, 1, scales.size()) - 1;
    const double s = src_edges[k] + (o - out_edges[k]) / scales[k] - 0.5;
    // Snap round-off so identity cells resample exactly.
    const double r = std::round(s);
    return std::fabs(s - r) < 1e-9 ? r : s;
  }
};

AxisMap make_axis(int size, const std::vector<double>& scales) {
  AxisMap m;
  m.scales = scales;
  const auto cells = scales.size();
  m.src_edges.resize(cells + 1);
  m.out_edges.resize(cells + 1);
  for (std::size_t k = 0; k <= cells; ++k) {
    m.src_edges[k] = static_cast<double>(size) * static_cast<double>(k) / static_cast<double>(cells);
  }
  m.out_edges[0] = 0.0;
  for (std::size_t k = 0; k < cells; ++k) {
    m.out_edges[k + 1] = m.out_edges[k] + (m.src_edges[k + 1] - m.src_edges[k]) * scales[k];
  }
  m.out_size = std::max(1, static_cast<int>(std::lround(m.out_edges[cells])));
  return m;
}

}  // namespace

ImageBuffer warp_grid_distort(const ImageBuffer& rgba, const GridDistortion& grid) {
  if (rgba.channels() != 4) throw InvalidArgument("warp_grid_distort expects an RGBA asset");
  if (grid.cells < 1 || grid.x_scales.size() != static_cast<std::size_t>(grid.cells) ||
      grid.y_scales.size() != static_cast<std::size_t>(grid.cells)) {
    throw InvalidArgument("grid distortion record is inconsistent");
  }
  if (rgba.empty()) return rgba;
  const AxisMap ax = make_axis(rgba.width(), grid.x_scales);
  const AxisMap ay = make_axis(rgba.height(), grid.y_scales);

  std::vector<double> sxs(static_cast<std::size_t>(ax.out_size));
  for (int x = 0; x < ax.out_size; ++x) sxs[static_cast<std::size_t>(x)] = ax.source_of(x);

  ImageBuffer out(ax.out_size, ay.out_size, 4);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < ay.out_size; ++y) {
    const double sy = ay.source_of(y);
    for (int x = 0; x < ax.out_size; ++x) {
      sample_rgba_transparent(rgba, sxs[static_cast<std::size_t>(x)], sy, out.pixel(x, y));
    }
  }
  return out;
}

}  // namespace toonsynth
