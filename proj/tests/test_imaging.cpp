#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "test_util.hpp"
#include "toonsynth/error.hpp"
#include "toonsynth/imaging/color.hpp"
#include "toonsynth/imaging/distance.hpp"
#include "toonsynth/imaging/filter.hpp"
#include "toonsynth/imaging/png.hpp"
#include "toonsynth/imaging/warp.hpp"
#include "toonsynth/oracles.hpp"
#include "toonsynth/rng.hpp"

using namespace toonsynth;

TEST_CASE("hsv of primaries and gray") {
  auto g = rgb_to_hsv(0, 1, 0);
  CHECK(g.h == doctest::Approx(1.0 / 3.0));
  CHECK(g.s == 1.0f);
  CHECK(g.v == 1.0f);
  auto r = rgb_to_hsv(1, 0, 0);
  CHECK(r.h == 0.0f);
  CHECK(r.s == 1.0f);
  auto gray = rgb_to_hsv(0.5f, 0.5f, 0.5f);
  CHECK(gray.h == 0.0f);
  CHECK(gray.s == 0.0f);
  CHECK(gray.v == 0.5f);
}

TEST_CASE("hsv round trip on 8-bit levels") {
  RngStream rng(11, 0, StreamTag::Test);
  for (int i = 0; i < 2000; ++i) {
    const float r = from_u8(static_cast<std::uint8_t>(rng.uniform_int(0, 255)));
    const float g = from_u8(static_cast<std::uint8_t>(rng.uniform_int(0, 255)));
    const float b = from_u8(static_cast<std::uint8_t>(rng.uniform_int(0, 255)));
    const auto back = hsv_to_rgb(rgb_to_hsv(r, g, b));
    CHECK(to_u8(back[0]) == to_u8(r));
    CHECK(to_u8(back[1]) == to_u8(g));
    CHECK(to_u8(back[2]) == to_u8(b));
  }
}

TEST_CASE("circular hue distance wraps") {
  CHECK(circular_hue_distance(0.99f, 0.01f) == doctest::Approx(0.02));
  CHECK(circular_hue_distance(0.2f, 0.7f) == doctest::Approx(0.5));
}

TEST_CASE("bilateral filter fixes constants") {
  ImageBuffer img(20, 15, 3);
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = i % 3 == 0 ? 0.2f : 0.7f;
  CHECK(bilateral_filter(img, 9, 30.0) == img);
}

TEST_CASE("bilateral impulse against a direct double loop") {
  const int n = 41, d = 17;
  const double sigma = 80.0;
  ImageBuffer img(n, n, 3, 0.5f);
  for (int c = 0; c < 3; ++c) img.at(20, 20, c) = 1.0f;
  const ImageBuffer out = bilateral_filter(img, d, sigma);
  // Reference: every in-image tap, spatial and range gaussians with the same sigma.
  auto ref = [&](int x, int y, int c) {
    double num = 0.0, den = 0.0;
    for (int dy = -d / 2; dy <= d / 2; ++dy) {
      for (int dx = -d / 2; dx <= d / 2; ++dx) {
        const int xx = x + dx, yy = y + dy;
        if (xx < 0 || yy < 0 || xx >= n || yy >= n) continue;
        double dist2 = 0.0;
        for (int k = 0; k < 3; ++k) {
          const double diff = 255.0 * (img.at(xx, yy, k) - img.at(x, y, k));
          dist2 += diff * diff;
        }
        const double w = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) * std::exp(-dist2 / (2 * sigma * sigma));
        num += w * img.at(xx, yy, c);
        den += w;
      }
    }
    return num / den;
  };
  for (int y = 0; y < n; y += 3) {
    for (int x = 0; x < n; x += 3) CHECK(out.at(x, y, 0) == doctest::Approx(ref(x, y, 0)).epsilon(1e-5));
  }
  CHECK(out.at(20, 20, 0) == doctest::Approx(ref(20, 20, 0)).epsilon(1e-5));
  CHECK(out.at(20, 20, 0) < 1.0f);
  // Far from the impulse the flat field stays within one level.
  CHECK(std::fabs(out.at(0, 0, 0) - 0.5f) <= 1.0f / 255.0f);
  CHECK(std::fabs(out.at(40, 5, 1) - 0.5f) <= 1.0f / 255.0f);
}

TEST_CASE("bilateral rejects even diameters") {
  ImageBuffer img(8, 8, 3);
  CHECK_THROWS_AS(bilateral_filter(img, 4, 10.0), InvalidArgument);
}

TEST_CASE("bilateral serial and parallel agree bitwise") {
  RngStream rng(3, 0, StreamTag::Test);
  ImageBuffer img(37, 29, 3);
  for (float& v : img.data()) v = static_cast<float>(rng.uniform());
  CHECK(bilateral_filter(img, 7, 25.0) == serial::bilateral_filter(img, 7, 25.0));
}

namespace {
ImageBuffer random_rgba(RngStream& rng, int w, int h) {
  ImageBuffer img(w, h, 4);
  for (float& v : img.data()) v = from_u8(static_cast<std::uint8_t>(rng.uniform_int(0, 255)));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.at(x, y, 3) = 1.0f;
  }
  return img;
}
}  // namespace

TEST_CASE("rotation by 0 and 90 degrees") {
  RngStream rng(5, 0, StreamTag::Test);
  const ImageBuffer img = random_rgba(rng, 9, 9);
  CHECK(warp_rotate(img, 0.0) == img);
  const ImageBuffer r = warp_rotate(img, 90.0);
  REQUIRE(r.width() == 9);
  REQUIRE(r.height() == 9);
  // Counter-clockwise on screen: the top row becomes the left column, read bottom-up.
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 9; ++x) {
      for (int c = 0; c < 4; ++c) CHECK(r.at(x, y, c) == img.at(8 - y, x, c));
    }
  }
}

TEST_CASE("30 degree rotation keeps the alpha centroid") {
  ImageBuffer img(40, 24, 4);
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 40; ++x) {
      const bool in = (x - 12) * (x - 12) + (y - 10) * (y - 10) < 64 || (x > 25 && x < 36 && y > 4 && y < 20);
      if (!in) continue;
      img.at(x, y, 0) = 1.0f;
      img.at(x, y, 3) = 1.0f;
    }
  }
  const double deg = 30.0;
  const ImageBuffer r = warp_rotate(img, deg);
  auto centroid = [](const ImageBuffer& im) {
    double sx = 0, sy = 0, sa = 0;
    for (int y = 0; y < im.height(); ++y) {
      for (int x = 0; x < im.width(); ++x) {
        const double a = im.at(x, y, 3);
        sx += a * (x + 0.5);
        sy += a * (y + 0.5);
        sa += a;
      }
    }
    return std::array<double, 2>{sx / sa, sy / sa};
  };
  // Forward mapping of the source centroid: counter-clockwise on screen with y down.
  const auto c = centroid(img);
  const double t = deg * M_PI / 180.0;
  const double px = c[0] - 20.0, py = c[1] - 12.0;
  const double ex = std::cos(t) * px + std::sin(t) * py + r.width() / 2.0;
  const double ey = -std::sin(t) * px + std::cos(t) * py + r.height() / 2.0;
  const auto got = centroid(r);
  CHECK(std::fabs(got[0] - ex) < 0.5);
  CHECK(std::fabs(got[1] - ey) < 0.5);
}

TEST_CASE("grid distortion with zero limits is the identity") {
  RngStream rng(6, 0, StreamTag::Test);
  const ImageBuffer img = random_rgba(rng, 23, 17);
  CHECK(warp_grid_distort(img, 5, 0.0, 0.0, rng) == img);
}

TEST_CASE("grid distortion rejects inverted limits") {
  RngStream rng(6, 0, StreamTag::Test);
  CHECK_THROWS_AS(draw_grid_distortion(5, 0.3, -0.3, rng), InvalidArgument);
}

TEST_CASE("grid distortion with one cell is a global scale") {
  RngStream rng(7, 0, StreamTag::Test);
  const auto g = draw_grid_distortion(1, -0.3, 0.3, rng);
  REQUIRE(g.x_scales.size() == 1);
  const ImageBuffer img = random_rgba(rng, 20, 10);
  const ImageBuffer out = warp_grid_distort(img, g);
  CHECK(out.width() == std::lround(20 * g.x_scales[0]));
  CHECK(out.height() == std::lround(10 * g.y_scales[0]));
}

TEST_CASE("grid distortion matches the frozen checkerboard raster") {
  ImageBuffer img(8, 8, 4);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const bool red = ((x / 2) + (y / 2)) % 2 == 0;
      img.at(x, y, 0) = red ? 1.0f : 0.0f;
      img.at(x, y, 2) = red ? 0.0f : 1.0f;
      img.at(x, y, 3) = 1.0f;
    }
  }
  for (int c = 0; c < 4; ++c) img.at(0, 0, c) = 0.0f;
  GridDistortion g{2, {1.25, 0.75}, {0.8, 1.5}};
  const ImageBuffer out = warp_grid_distort(img, g);

  std::ifstream in(testutil::source_dir() / "tests/golden/grid_checker.txt");
  int w = 0, h = 0;
  in >> w >> h;
  REQUIRE(out.width() == w);
  REQUIRE(out.height() == h);
  int mismatches = 0;
  for (float v : out.data()) {
    double want = -1;
    in >> want;
    mismatches += std::fabs(v - want) > 1e-5;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("grid distortion draws are stable for a fixed seed") {
  RngStream rng(2024, 3, StreamTag::Augment);
  const auto g = draw_grid_distortion(5, -0.3, 0.3, rng);
  for (double s : g.x_scales) CHECK((s >= 0.7 && s <= 1.3));
  RngStream again(2024, 3, StreamTag::Augment);
  CHECK(draw_grid_distortion(5, -0.3, 0.3, again) == g);
}

TEST_CASE("resize long side") {
  ImageBuffer img(100, 50, 4, 1.0f);
  const ImageBuffer r = resize_long_side(img, 200);
  CHECK(r.width() == 200);
  CHECK(r.height() == 100);
  ImageBuffer sq(31, 31, 3, 0.25f);
  CHECK(resize_long_side(sq, 31) == sq);
}

TEST_CASE("premultiplied resize does not bleed transparent color") {
  ImageBuffer img(2, 1, 4);
  img.at(0, 0, 0) = 1.0f;  // opaque red
  img.at(0, 0, 3) = 1.0f;
  img.at(1, 0, 2) = 1.0f;  // transparent blue
  const ImageBuffer r = resize_bilinear(img, 4, 1);
  for (int x = 0; x < 4; ++x) {
    if (r.at(x, 0, 3) > 0.0f) CHECK(r.at(x, 0, 2) == 0.0f);
  }
}

TEST_CASE("distance transform basics") {
  BinaryMask empty(6, 5);
  for (double v : squared_distance_to_complement(empty)) CHECK(v == 0.0);
  BinaryMask one(7, 7);
  one.set(3, 3, true);
  const auto d = distance_to_complement(one);
  CHECK(d[3 * 7 + 3] == 1.0);
}

TEST_CASE("distance transform equals brute force on random masks") {
  RngStream rng(12, 0, StreamTag::Test);
  for (int i = 0; i < 200; ++i) {
    const BinaryMask m = i % 2 ? oracle::random_shape_mask(rng, 32, 32) : oracle::random_mask(rng, 32, 32, rng.uniform());
    for (Border b : {Border::Ignore, Border::Exterior}) {
      const auto fast = squared_distance_to_complement(m, b);
      const auto ref = oracle::distance_sq(m, b);
      bool same = true;
      for (std::size_t k = 0; k < fast.size(); ++k) {
        const double want = ref[k] == std::numeric_limits<std::int64_t>::max() ? INFINITY : static_cast<double>(ref[k]);
        same = same && fast[k] == want;
      }
      CHECK(same);
      CHECK(serial::squared_distance_to_complement(m, b) == fast);
    }
  }
}

TEST_CASE("png round trip") {
  const auto dir = testutil::temp_dir("png");
  RngStream rng(13, 0, StreamTag::Test);
  ImageBuffer img = random_rgba(rng, 17, 9);
  img.at(3, 4, 3) = from_u8(77);
  write_png(dir / "a.png", img);
  CHECK(read_png(dir / "a.png") == img);
  BinaryMask m = oracle::random_mask(rng, 13, 11, 0.4);
  write_mask_png(dir / "m.png", m);
  CHECK(read_mask_png(dir / "m.png") == m);
  CHECK_THROWS_AS(read_png(dir / "missing.png"), IoError);
}
