#include "toonsynth/imaging/distance.hpp"

#include <cmath>
#include <limits>

namespace toonsynth {

namespace {

constexpr double kFar = 1e20;

// 1-D squared distance transform of sampled function f (lower envelope of
// parabolas). v and z are scratch buffers of size n and n+1.
void edt_1d(const double* f, double* d, int n, int* v, double* z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto meet = [f](int q, int p) {
    return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
  };
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    double s = meet(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = meet(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

struct Grid {
  int w, h, pad;
};

Grid grid_for(const BinaryMask& mask, Border border) {
  const int pad = border == Border::Exterior ? 1 : 0;
  return {mask.width() + 2 * pad, mask.height() + 2 * pad, pad};
}

std::vector<double> seed_field(const BinaryMask& mask, const Grid& g) {
  std::vector<double> f(static_cast<std::size_t>(g.w) * static_cast<std::size_t>(g.h), 0.0);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      f[static_cast<std::size_t>(y + g.pad) * static_cast<std::size_t>(g.w) +
        static_cast<std::size_t>(x + g.pad)] = mask.at(x, y) ? kFar : 0.0;
    }
  }
  return f;
}

void column_pass(std::vector<double>& f, const Grid& g, int x) {
  std::vector<double> col(static_cast<std::size_t>(g.h)), out(static_cast<std::size_t>(g.h));
  std::vector<int> v(static_cast<std::size_t>(g.h));
  std::vector<double> z(static_cast<std::size_t>(g.h) + 1);
  for (int y = 0; y < g.h; ++y) col[static_cast<std::size_t>(y)] = f[static_cast<std::size_t>(y) * g.w + x];
  edt_1d(col.data(), out.data(), g.h, v.data(), z.data());
  for (int y = 0; y < g.h; ++y) f[static_cast<std::size_t>(y) * g.w + x] = out[static_cast<std::size_t>(y)];
}

void row_pass(std::vector<double>& f, const Grid& g, int y) {
  std::vector<double> row(f.begin() + static_cast<std::ptrdiff_t>(y) * g.w,
                          f.begin() + static_cast<std::ptrdiff_t>(y + 1) * g.w);
  std::vector<int> v(static_cast<std::size_t>(g.w));
  std::vector<double> z(static_cast<std::size_t>(g.w) + 1);
  edt_1d(row.data(), f.data() + static_cast<std::size_t>(y) * g.w, g.w, v.data(), z.data());
}

std::vector<double> unpad(const std::vector<double>& f, const BinaryMask& mask, const Grid& g) {
  std::vector<double> out(mask.size());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const double v = f[static_cast<std::size_t>(y + g.pad) * g.w + static_cast<std::size_t>(x + g.pad)];
      out[static_cast<std::size_t>(y) * mask.width() + x] =
          v >= kFar ? std::numeric_limits<double>::infinity() : v;
    }
  }
  return out;
}

}  // namespace

std::vector<double> squared_distance_to_complement(const BinaryMask& mask, Border border) {
  if (mask.empty()) return {};
  const Grid g = grid_for(mask, border);
  std::vector<double> f = seed_field(mask, g);
#pragma omp parallel for schedule(static)
  for (int x = 0; x < g.w; ++x) column_pass(f, g, x);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < g.h; ++y) row_pass(f, g, y);
  return unpad(f, mask, g);
}

std::vector<double> distance_to_complement(const BinaryMask& mask, Border border) {
  std::vector<double> d = squared_distance_to_complement(mask, border);
  for (double& v : d) v = std::sqrt(v);
  return d;
}

namespace serial {

std::vector<double> squared_distance_to_complement(const BinaryMask& mask, Border border) {
  if (mask.empty()) return {};
  const Grid g = grid_for(mask, border);
  std::vector<double> f = seed_field(mask, g);
  for (int x = 0; x < g.w; ++x) column_pass(f, g, x);
  for (int y = 0; y < g.h; ++y) row_pass(f, g, y);
  return unpad(f, mask, g);
}

}  // namespace serial

}  // namespace toonsynth
