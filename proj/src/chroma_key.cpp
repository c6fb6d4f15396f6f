#include "toonsynth/chroma_key.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "toonsynth/error.hpp"
#include "toonsynth/geometry.hpp"
#include "toonsynth/imaging/color.hpp"

namespace toonsynth {

std::vector<std::size_t> sample_frame_indices(std::size_t frame_count, double source_fps,
                                              double target_hz) {
  if (frame_count == 0) throw InvalidArgument("sample_frames: empty frame list");
  if (!(source_fps > 0.0)) throw InvalidArgument("sample_frames: source fps must be positive");
  if (!(target_hz > 0.0)) throw InvalidArgument("sample_frames: target rate must be positive");
  std::vector<std::size_t> out;
  for (std::size_t k = 0;; ++k) {
    const double pos = std::floor(static_cast<double>(k) * source_fps / target_hz);
    if (pos >= static_cast<double>(frame_count)) break;
    const auto idx = static_cast<std::size_t>(pos);
    if (out.empty() || out.back() != idx) out.push_back(idx);
  }
  return out;
}

std::vector<std::filesystem::path> sample_frames(const std::vector<std::filesystem::path>& frames,
                                                 double source_fps, double target_hz) {
  std::vector<std::filesystem::path> out;
  for (std::size_t i : sample_frame_indices(frames.size(), source_fps, target_hz)) out.push_back(frames[i]);
  return out;
}

std::uint64_t HueHistogram::gated() const noexcept {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

namespace {

void check_rgb(const ImageBuffer& img, const char* who) {
  if (img.channels() != 3) throw InvalidArgument(std::string(who) + ": expects a 3-channel frame");
}

// Gated hue bin for one pixel, or -1.
inline int gated_bin(float r, float g, float b, const KeyingParams& p) {
  if (std::max({r, g, b}) < p.search_v_min) return -1;
  const HsvPixel hsv = rgb_to_hsv(r, g, b);
  if (hsv.s < p.search_s_min) return -1;
  const int bin = static_cast<int>(hsv.h * static_cast<float>(p.bins));
  return std::min(bin, p.bins - 1);
}

void check_params(const KeyingParams& p) {
  if (p.bins < 1) throw InvalidArgument("keying: bins must be positive");
  if (!(p.half_window > 0.0 && p.half_window < 0.5)) throw InvalidArgument("keying: bad window");
}

constexpr int kBlock = 1024;             // pixels per vectorized block
constexpr double kOffsetScale = 0x1p30;  // fixed-point units per bin of the in-bin hue offsets

// Gated hue bin of n pixels (-1 where the S/V gate fails) and the hue's
// offset from the bin's lower edge in fixed point. Hues are the values of
// rgb_to_hsv, written without branches so the loop vectorizes; the AVX2
// clone is picked at run time.
__attribute__((target_clones("avx2", "default"), optimize("no-trapping-math"))) void gated_bins(
    const float* __restrict px, int n, float v_min, float s_min, int bins, int* __restrict bin_out,
    std::int32_t* __restrict offset_out) {
  const auto fbins = static_cast<float>(bins);
  const auto dbins = static_cast<double>(bins);
#pragma omp simd
  for (int i = 0; i < n; ++i) {
    const float r = px[3 * i], g = px[3 * i + 1], b = px[3 * i + 2];
    float mx = r > g ? r : g;
    mx = b > mx ? b : mx;
    float mn = r < g ? r : g;
    mn = b < mn ? b : mn;
    const float c = mx - mn;
    const float s = c / (mx > 0.0f ? mx : 1.0f);
    const bool is_r = mx == r, is_g = mx == g;
    float num = r - g, off = 4.0f;
    num = is_g ? b - r : num;
    off = is_g ? 2.0f : off;
    num = is_r ? g - b : num;
    off = is_r ? 0.0f : off;
    float h = num / c + off;
    h = h < 0.0f ? h + 6.0f : h;
    h /= 6.0f;
    h = h >= 1.0f ? h - 1.0f : h;
    h = h < 0.0f ? 0.0f : h;
    int bin = static_cast<int>(h * fbins);
    bin = bin < bins - 1 ? bin : bins - 1;
    const bool keep = (mx >= v_min) & (s >= s_min);
    bin_out[i] = keep ? bin : -1;
    offset_out[i] = keep ? static_cast<std::int32_t>((static_cast<double>(h) * dbins - bin) * kOffsetScale) : 0;
  }
}

// Per-bin gated counts and sums of the in-bin offsets. Integer sums make the
// result independent of the summation order and so of the thread count.
struct BinMoments {
  std::vector<std::uint64_t> counts;
  std::vector<std::int64_t> offsets;

  explicit BinMoments(int bins) : counts(static_cast<std::size_t>(bins), 0), offsets(counts.size(), 0) {}
};

BinMoments bin_moments(const ImageBuffer& rgb, const KeyingParams& p) {
  const auto n = static_cast<std::int64_t>(rgb.pixel_count());
  const std::int64_t blocks = (n + kBlock - 1) / kBlock;
  const float* px = rgb.data().data();
  BinMoments total(p.bins);
#pragma omp parallel
  {
    // Four interleaved tables: key pixels keep hitting the same bin, and
    // splitting shortens that dependency chain.
    std::vector<BinMoments> local(4, BinMoments(p.bins));
    int bin[kBlock];
    std::int32_t offset[kBlock];
#pragma omp for schedule(static) nowait
    for (std::int64_t k = 0; k < blocks; ++k) {
      const int m = static_cast<int>(std::min<std::int64_t>(kBlock, n - k * kBlock));
      gated_bins(px + 3 * k * kBlock, m, p.search_v_min, p.search_s_min, p.bins, bin, offset);
      for (int i = 0; i < m; ++i) {
        if (bin[i] < 0) continue;
        auto& t = local[static_cast<std::size_t>(i & 3)];
        ++t.counts[static_cast<std::size_t>(bin[i])];
        t.offsets[static_cast<std::size_t>(bin[i])] += offset[i];
      }
    }
#pragma omp critical(toonsynth_bin_moments)
    for (const auto& t : local) {
      for (std::size_t b = 0; b < total.counts.size(); ++b) {
        total.counts[b] += t.counts[b];
        total.offsets[b] += t.offsets[b];
      }
    }
  }
  return total;
}

}  // namespace

HueHistogram hue_histogram(const ImageBuffer& rgb, const KeyingParams& params) {
  check_rgb(rgb, "hue_histogram");
  check_params(params);
  HueHistogram hist;
  hist.counts = bin_moments(rgb, params).counts;
  hist.total_pixels = rgb.pixel_count();
  return hist;
}

namespace serial {

HueHistogram hue_histogram(const ImageBuffer& rgb, const KeyingParams& params) {
  check_rgb(rgb, "hue_histogram");
  check_params(params);
  HueHistogram hist;
  hist.counts.assign(static_cast<std::size_t>(params.bins), 0);
  hist.total_pixels = rgb.pixel_count();
  const auto d = rgb.data();
  for (std::size_t i = 0; i < d.size(); i += 3) {
    const int bin = gated_bin(d[i], d[i + 1], d[i + 2], params);
    if (bin >= 0) ++hist.counts[static_cast<std::size_t>(bin)];
  }
  return hist;
}

}  // namespace serial

int window_bins(const KeyingParams& params) {
  return static_cast<int>(std::lround(2.0 * params.half_window * params.bins));
}

KeyingEstimate estimate_keying_hue(const ImageBuffer& rgb, const KeyingParams& params) {
  check_rgb(rgb, "estimate_keying_hue");
  check_params(params);
  const BinMoments m = bin_moments(rgb, params);
  std::uint64_t gated = 0;
  for (auto c : m.counts) gated += c;
  if (gated == 0) {
    throw ZeroSupport("no pixel has saturation and value above the keying gate");
  }
  const int bins = params.bins;
  const int span = std::max(1, window_bins(params));
  const int half = span / 2;

  // Candidate hue b / bins; its window covers bins [b - half, b - half + span).
  auto wrap = [&](int b) { return static_cast<std::size_t>(((b % bins) + bins) % bins); };
  std::uint64_t running = 0;
  for (int i = 0; i < span; ++i) running += m.counts[wrap(-half + i)];
  std::uint64_t best = running;
  int best_b = 0;
  for (int b = 1; b < bins; ++b) {
    running += m.counts[wrap(b - half + span - 1)];
    running -= m.counts[wrap(b - half - 1)];
    if (running > best) {
      best = running;
      best_b = b;
    }
  }
  const int start = static_cast<int>(wrap(best_b - half));

  // Mean hue of the gated pixels in the winning window, unwrapped so the
  // window is contiguous even when it straddles 0.
  double edges = 0.0;
  std::int64_t offsets = 0;
  for (int i = 0; i < span; ++i) {
    const std::size_t b = wrap(start + i);
    edges += static_cast<double>(m.counts[b]) * (start + i);
    offsets += m.offsets[b];
  }
  double hue = (edges + static_cast<double>(offsets) / kOffsetScale) / (static_cast<double>(best) * bins);
  hue -= std::floor(hue);

  KeyingEstimate est;
  est.hue_star = static_cast<float>(hue);
  if (est.hue_star >= 1.0f) est.hue_star = 0.0f;
  est.support = best;
  est.coverage = static_cast<double>(best) / static_cast<double>(rgb.pixel_count());
  est.window_start_bin = start;
  return est;
}

std::string to_string(AssetSource s) {
  return s == AssetSource::ChromaKey ? "chroma_key" : "still_illustration";
}

AssetSource asset_source_from_string(const std::string& s) {
  if (s == "chroma_key") return AssetSource::ChromaKey;
  if (s == "still_illustration") return AssetSource::StillIllustration;
  throw FormatError("unknown asset source '" + s + "'");
}

bool is_key_pixel(float r, float g, float b, const KeyingEstimate& key, const KeyingParams& params) {
  const HsvPixel p = rgb_to_hsv(r, g, b);
  if (p.s < params.extract_s_min || p.v < params.extract_v_min) return false;
  return circular_hue_distance(p.h, key.hue_star) <= static_cast<float>(params.half_window);
}

BinaryMask foreground_mask(const ImageBuffer& keyed_rgb, const KeyingEstimate& key,
                           const KeyingParams& params) {
  check_rgb(keyed_rgb, "foreground_mask");
  BinaryMask mask(keyed_rgb.width(), keyed_rgb.height());
  const int h = keyed_rgb.height(), w = keyed_rgb.width();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto p = keyed_rgb.pixel(x, y);
      mask.set(x, y, !is_key_pixel(p[0], p[1], p[2], key, params));
    }
  }
  return mask;
}

namespace {

InstanceAsset cut_out(const ImageBuffer& color, const BinaryMask& mask, AssetProvenance prov) {
  const auto box = tight_box(mask);
  if (!box) throw EmptyForeground("keying removed every pixel of the frame");
  const int x0 = static_cast<int>(box->x_min), y0 = static_cast<int>(box->y_min);
  const int w = static_cast<int>(box->width()), h = static_cast<int>(box->height());
  InstanceAsset asset;
  asset.mask = crop(mask, x0, y0, w, h);
  asset.rgba = ImageBuffer(w, h, 4);
  const int cc = color.channels();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto src = color.pixel(x0 + x, y0 + y);
      auto dst = asset.rgba.pixel(x, y);
      for (int c = 0; c < 3; ++c) dst[c] = src[cc == 1 ? 0 : c];
      const float a = cc == 4 ? src[3] : 1.0f;
      dst[3] = asset.mask.at(x, y) ? a : 0.0f;
    }
  }
  prov.crop_x += x0;
  prov.crop_y += y0;
  asset.provenance = std::move(prov);
  return asset;
}

}  // namespace

InstanceAsset extract_instance(const ImageBuffer& keyed_rgb, const KeyingEstimate& key,
                               const KeyingParams& params, const ImageBuffer* color_rgb) {
  const ImageBuffer& color = color_rgb ? *color_rgb : keyed_rgb;
  if (color.width() != keyed_rgb.width() || color.height() != keyed_rgb.height()) {
    throw InvalidArgument("extract_instance: color frame and keyed frame differ in size");
  }
  const BinaryMask mask = foreground_mask(keyed_rgb, key, params);
  AssetProvenance prov;
  prov.source = AssetSource::ChromaKey;
  prov.native_width = keyed_rgb.width();
  prov.native_height = keyed_rgb.height();
  return cut_out(color, mask, std::move(prov));
}

InstanceAsset apply_mask(const InstanceAsset& asset, const BinaryMask& mask) {
  if (!mask.same_shape(asset.mask)) throw InvalidArgument("apply_mask: mask dimension mismatch");
  ImageBuffer rgba = asset.rgba;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      rgba.at(x, y, 3) = mask.at(x, y) ? 1.0f : 0.0f;
    }
  }
  return cut_out(rgba, mask, asset.provenance);
}

Components label_components(const BinaryMask& mask, bool value, bool eight_connected) {
  const int w = mask.width(), h = mask.height();
  Components comp;
  comp.labels.assign(mask.size(), 0);
  std::vector<int> stack;
  const std::uint8_t want = value ? 1 : 0;
  const auto bits = mask.bits();
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      const int seed = sy * w + sx;
      if (bits[static_cast<std::size_t>(seed)] != want || comp.labels[static_cast<std::size_t>(seed)]) continue;
      const int id = static_cast<int>(comp.areas.size()) + 1;
      std::size_t area = 0;
      bool border = false;
      stack.push_back(seed);
      comp.labels[static_cast<std::size_t>(seed)] = id;
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        ++area;
        const int x = p % w, y = p / w;
        if (x == 0 || y == 0 || x == w - 1 || y == h - 1) border = true;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (!eight_connected && dx != 0 && dy != 0)) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const int q = ny * w + nx;
            if (bits[static_cast<std::size_t>(q)] != want || comp.labels[static_cast<std::size_t>(q)]) continue;
            comp.labels[static_cast<std::size_t>(q)] = id;
            stack.push_back(q);
          }
        }
      }
      comp.areas.push_back(area);
      comp.touches_border.push_back(border);
    }
  }
  return comp;
}

BinaryMask despeckle(const BinaryMask& mask, std::size_t min_area) {
  if (min_area == 0 || mask.empty()) return mask;
  BinaryMask out = mask;
  {
    const Components fg = label_components(out, true, true);
    auto bits = out.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      const int id = fg.labels[i];
      if (id && fg.areas[static_cast<std::size_t>(id - 1)] < min_area) bits[i] = 0;
    }
  }
  {
    const Components bg = label_components(out, false, false);
    auto bits = out.bits();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      const int id = bg.labels[i];
      if (id && !bg.touches_border[static_cast<std::size_t>(id - 1)] &&
          bg.areas[static_cast<std::size_t>(id - 1)] < min_area) {
        bits[i] = 1;
      }
    }
  }
  return out;
}

}  // namespace toonsynth
