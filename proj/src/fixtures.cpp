#include "toonsynth/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "toonsynth/config.hpp"
#include "toonsynth/imaging/color.hpp"
#include "toonsynth/imaging/png.hpp"

namespace toonsynth::fixtures {

namespace fs = std::filesystem;

namespace {

struct Ellipse {
  double cx, cy, rx, ry, angle;
  bool contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = (c * dx + s * dy) / rx, v = (-s * dx + c * dy) / ry;
    return u * u + v * v <= 1.0;
  }
};

// Paints blobs into `mask`/`color` until at least min_blobs are drawn and the
// covered fraction of the (x0, y0, w, h) box reaches `fill`.
void paint_blobs(RngStream& rng, int x0, int y0, int w, int h, int min_blobs, double fill, BinaryMask& mask,
                 ImageBuffer& color) {
  const double target = fill * w * h;
  std::size_t covered = 0;
  for (int b = 0; b < 64 && (b < min_blobs || static_cast<double>(covered) < target); ++b) {
    const double area = target / min_blobs * rng.uniform(0.5, 1.0);
    const double aspect = rng.uniform(0.5, 2.0);
    Ellipse e{};
    e.rx = std::sqrt(area * aspect / M_PI);
    e.ry = std::sqrt(area / aspect / M_PI);
    e.rx = std::min(e.rx, w / 2.0);
    e.ry = std::min(e.ry, h / 2.0);
    e.cx = x0 + rng.uniform(e.rx, std::max(e.rx, w - e.rx));
    e.cy = y0 + rng.uniform(e.ry, std::max(e.ry, h - e.ry));
    e.angle = rng.uniform(0.0, M_PI);
    const float rgb[3] = {static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
                          static_cast<float>(rng.uniform())};
    const double reach = std::max(e.rx, e.ry);
    const int ya = std::max(y0, static_cast<int>(e.cy - reach)), yb = std::min(y0 + h - 1, static_cast<int>(e.cy + reach));
    const int xa = std::max(x0, static_cast<int>(e.cx - reach)), xb = std::min(x0 + w - 1, static_cast<int>(e.cx + reach));
    for (int y = ya; y <= yb; ++y) {
      for (int x = xa; x <= xb; ++x) {
        if (!e.contains(x + 0.5, y + 0.5)) continue;
        if (!mask.at(x, y)) ++covered;
        mask.set(x, y, true);
        for (int c = 0; c < 3; ++c) color.at(x, y, c) = rgb[c];
      }
    }
  }
}

}  // namespace

InstanceAsset make_sprite(RngStream& rng, int w, int h, const std::string& id, int min_blobs, double fill) {
  BinaryMask mask(w, h);
  ImageBuffer color(w, h, 3);
  paint_blobs(rng, 0, 0, w, h, min_blobs, fill, mask, color);
  InstanceAsset a;
  a.rgba = ImageBuffer(w, h, 4);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) a.rgba.at(x, y, c) = color.at(x, y, c);
      a.rgba.at(x, y, 3) = mask.at(x, y) ? 1.0f : 0.0f;
    }
  }
  quantize_to_u8_levels(a.rgba);
  a.mask = std::move(mask);
  a.provenance.asset_id = id;
  a.provenance.source = AssetSource::StillIllustration;
  a.provenance.native_width = w;
  a.provenance.native_height = h;
  return a;
}

ImageBuffer make_background(RngStream& rng, int w, int h, int noise) {
  float c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = static_cast<float>(rng.uniform(0.1, 0.9));
    c1[c] = static_cast<float>(rng.uniform(0.1, 0.9));
  }
  const double angle = rng.uniform(0.0, 2.0 * M_PI);
  const double fx = rng.uniform(1.0, 4.0) * 2.0 * M_PI / w, fy = rng.uniform(1.0, 4.0) * 2.0 * M_PI / h;
  const double phase = rng.uniform(0.0, 2.0 * M_PI);
  ImageBuffer img(w, h, 3);
  const double diag = std::hypot(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double t = std::clamp(0.5 + ((x - w / 2.0) * std::cos(angle) + (y - h / 2.0) * std::sin(angle)) / diag, 0.0, 1.0);
      const double wave = 0.08 * std::sin(fx * x + phase) * std::cos(fy * y);
      for (int c = 0; c < 3; ++c) {
        const double n = noise > 0 ? static_cast<double>(rng.uniform_int(-noise, noise)) / 255.0 : 0.0;
        img.at(x, y, c) = static_cast<float>(std::clamp((1 - t) * c0[c] + t * c1[c] + wave + n, 0.0, 1.0));
      }
    }
  }
  quantize_to_u8_levels(img);
  return img;
}

ChromaFrame make_chroma_frame(RngStream& rng, int size, double hue, double coverage) {
  ChromaFrame f;
  f.hue = hue;
  const auto key = hsv_to_rgb(HsvPixel{static_cast<float>(hue), static_cast<float>(rng.uniform(0.96, 1.0)),
                                       static_cast<float>(rng.uniform(0.96, 1.0))});
  f.frame = ImageBuffer(size, size, 3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < 3; ++c) f.frame.at(x, y, c) = key[c];
    }
  }
  f.truth = BinaryMask(size, size);
  // The sprite lives in a centered box large enough to reach the coverage.
  const int box = std::min(size, static_cast<int>(std::ceil(std::sqrt(coverage / 0.8) * size)));
  const int off = (size - box) / 2;
  paint_blobs(rng, off, off, box, box, 4, coverage * size * size / (static_cast<double>(box) * box), f.truth, f.frame);
  for (float& v : f.frame.data()) {
    v = std::clamp(v + static_cast<float>(rng.uniform_int(-1, 1)) / 255.0f, 0.0f, 1.0f);
  }
  quantize_to_u8_levels(f.frame);
  return f;
}

GuideBundle make_guide_bundle(RngStream& rng, int photos, int max_boxes) {
  static constexpr int kSizes[][2] = {{640, 480}, {480, 640}, {640, 427}, {500, 375}, {640, 640}, {427, 640}};
  GuideBundle b;
  for (int p = 0; p < photos; ++p) {
    GuidePhoto g;
    g.id = std::to_string(100000 + p);
    const auto& sz = kSizes[rng.uniform_int(0, 5)];
    g.width = sz[0];
    g.height = sz[1];
    const int n = static_cast<int>(rng.uniform_int(1, max_boxes));
    for (int i = 0; i < n; ++i) {
      const double bh = std::round(rng.uniform(0.2, 0.85) * g.height * 100.0) / 100.0;
      const double bw = std::round(std::min(bh * rng.uniform(0.3, 0.75), g.width * 0.9) * 100.0) / 100.0;
      const double x = std::round(rng.uniform(0.0, g.width - bw) * 100.0) / 100.0;
      const double y = std::round(rng.uniform(0.0, g.height - bh) * 100.0) / 100.0;
      g.boxes.push_back(BoundingBox::from_xywh(x, y, bw, bh));
    }
    b.photos.push_back(std::move(g));
  }
  return b;
}

void write_guide_bundle(const fs::path& path, const GuideBundle& bundle) {
  nlohmann::ordered_json photos = nlohmann::ordered_json::array();
  for (const auto& p : bundle.photos) {
    nlohmann::ordered_json boxes = nlohmann::ordered_json::array();
    // Centipixel values, as generated; rounding drops the subtraction noise.
    auto cp = [](double v) { return std::round(v * 100.0) / 100.0; };
    for (const auto& b : p.boxes) boxes.push_back({cp(b.x_min), cp(b.y_min), cp(b.width()), cp(b.height())});
    photos.push_back({{"id", p.id}, {"width", p.width}, {"height", p.height}, {"boxes", boxes}});
  }
  write_text_file(path, nlohmann::ordered_json{{"photos", photos}}.dump() + "\n");
}

FixturePaths write_fixture_pools(const fs::path& dir, std::uint64_t seed, int foregrounds, int backgrounds,
                                 int guide_photos, std::uint64_t sample_count) {
  FixturePaths p{dir, dir / "foregrounds" / "pool.json", dir / "backgrounds", dir / "guide_boxes.json",
                 dir / "config.json"};
  fs::create_directories(dir / "foregrounds");
  fs::create_directories(p.backgrounds);

  RngStream rng(seed);
  PoolManifest manifest;
  for (int i = 0; i < foregrounds; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "%04d", i);
    const int w = static_cast<int>(rng.uniform_int(120, 360)), h = static_cast<int>(rng.uniform_int(160, 420));
    const InstanceAsset a = make_sprite(rng, w, h, std::string("sprite_") + stem);
    const std::string rgba = std::string(stem) + ".rgba.png", mask = std::string(stem) + ".mask.png";
    write_png(dir / "foregrounds" / rgba, a.rgba);
    write_mask_png(dir / "foregrounds" / mask, a.mask);
    manifest.entries.push_back({a.provenance.asset_id, rgba, mask, AssetSource::StillIllustration, w, h, ""});
  }
  write_pool_manifest(p.manifest, manifest);

  static constexpr int kBg[][2] = {{800, 600}, {1024, 768}, {600, 900}, {720, 720}, {1280, 720}, {900, 1200}};
  for (int i = 0; i < backgrounds; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "bg_%02d.png", i);
    const auto& sz = kBg[i % 6];
    write_png(p.backgrounds / name, make_background(rng, sz[0], sz[1]));
  }
  write_guide_bundle(p.guides, make_guide_bundle(rng, guide_photos));

  RunConfig cfg;
  cfg.sample_count = sample_count;
  cfg.master_seed = seed;
  cfg.pools = {"foregrounds/pool.json", "backgrounds", "guide_boxes.json"};
  write_text_file(p.config, run_config_to_json(cfg));
  return p;
}

void write_chroma_frames(const fs::path& dir, std::uint64_t seed, int frames, int size, double hue) {
  fs::create_directories(dir);
  RngStream rng(seed);
  for (int i = 0; i < frames; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.png", i);
    write_png(dir / name, make_chroma_frame(rng, size, hue, rng.uniform(0.1, 0.4)).frame);
  }
}

}  // namespace toonsynth::fixtures
