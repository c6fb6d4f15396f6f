#include "toonsynth/imaging/filter.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "toonsynth/error.hpp"

namespace toonsynth {

namespace {

struct BilateralKernel {
  int radius;
  int color_channels;
  float range_coef;            // 255^2 / (2 sigma^2)
  std::vector<float> spatial;  // (2r+1)^2 weights
};

BilateralKernel make_kernel(const ImageBuffer& img, int diameter, double sigma) {
  if (diameter < 3 || diameter % 2 == 0) {
    throw InvalidArgument("bilateral_filter: diameter must be odd and >= 3, got " +
                          std::to_string(diameter));
  }
  if (!(sigma > 0.0)) throw InvalidArgument("bilateral_filter: sigma must be positive");
  BilateralKernel k;
  k.radius = diameter / 2;
  k.color_channels = std::min(img.channels(), 3);
  k.range_coef = static_cast<float>(255.0 * 255.0 / (2.0 * sigma * sigma));
  const double spatial_coef = 1.0 / (2.0 * sigma * sigma);
  for (int dy = -k.radius; dy <= k.radius; ++dy) {
    for (int dx = -k.radius; dx <= k.radius; ++dx) {
      k.spatial.push_back(static_cast<float>(std::exp(-(dx * dx + dy * dy) * spatial_coef)));
    }
  }
  return k;
}

// One output row. Shared by the serial and parallel drivers so both produce
// the same bits. Deviations from the center are averaged, so constant
// regions come back exactly.
void filter_row(const ImageBuffer& img, const BilateralKernel& k, int y, ImageBuffer& out) {
  const int w = img.width(), h = img.height(), ch = img.channels();
  const int r = k.radius;
  const int side = 2 * r + 1;
  std::vector<float> acc(static_cast<std::size_t>(ch));
  for (int x = 0; x < w; ++x) {
    const auto center = img.pixel(x, y);
    std::fill(acc.begin(), acc.end(), 0.0f);
    float wsum = 0.0f;
    const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
    const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
    for (int yy = y0; yy <= y1; ++yy) {
      const float* srow = k.spatial.data() + static_cast<std::size_t>((yy - y + r) * side + r - x);
      for (int xx = x0; xx <= x1; ++xx) {
        const auto q = img.pixel(xx, yy);
        float d2 = 0.0f;
        for (int c = 0; c < k.color_channels; ++c) {
          const float d = q[c] - center[c];
          d2 += d * d;
        }
        const float wt = srow[xx] * std::exp(-d2 * k.range_coef);
        wsum += wt;
        for (int c = 0; c < ch; ++c) acc[static_cast<std::size_t>(c)] += wt * (q[c] - center[c]);
      }
    }
    auto dst = out.pixel(x, y);
    for (int c = 0; c < ch; ++c) dst[c] = std::clamp(center[c] + acc[static_cast<std::size_t>(c)] / wsum, 0.0f, 1.0f);
  }
}

}  // namespace

ImageBuffer bilateral_filter(const ImageBuffer& img, int diameter, double sigma) {
  const BilateralKernel k = make_kernel(img, diameter, sigma);
  ImageBuffer out(img.width(), img.height(), img.channels());
  const int h = img.height();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) filter_row(img, k, y, out);
  return out;
}

namespace serial {

ImageBuffer bilateral_filter(const ImageBuffer& img, int diameter, double sigma) {
  const BilateralKernel k = make_kernel(img, diameter, sigma);
  ImageBuffer out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) filter_row(img, k, y, out);
  return out;
}

}  // namespace serial

}  // namespace toonsynth
