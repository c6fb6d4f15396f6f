#include "toonsynth/harmonizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "toonsynth/error.hpp"

namespace toonsynth {

namespace {

double sq_dist(const Rgb& a, const Rgb& b) {
  const double dr = a[0] - b[0], dg = a[1] - b[1], db = a[2] - b[2];
  return dr * dr + dg * dg + db * db;
}

void assign(std::span<const Rgb> points, const std::vector<Rgb>& centers, std::vector<int>& label,
            std::vector<double>& dist, bool parallel) {
  const auto n = static_cast<std::int64_t>(points.size());
  const auto kc = centers.size();
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < kc; ++c) {
      const double d = sq_dist(points[static_cast<std::size_t>(i)], centers[c]);
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    label[static_cast<std::size_t>(i)] = arg;
    dist[static_cast<std::size_t>(i)] = best;
  }
}

std::vector<Rgb> seed_plus_plus(std::span<const Rgb> points, std::span<const double> weights, int k,
                                RngStream& rng) {
  std::vector<Rgb> centers;
  centers.push_back(points[rng.categorical(weights)]);
  std::vector<double> d2(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) d2[i] = sq_dist(points[i], centers[0]);
  std::vector<double> w(points.size());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      w[i] = weights[i] * d2[i];
      total += w[i];
    }
    if (total <= 0.0) break;  // every point already coincides with a center
    const Rgb next = points[rng.categorical(w)];
    centers.push_back(next);
    for (std::size_t i = 0; i < points.size(); ++i) d2[i] = std::min(d2[i], sq_dist(points[i], next));
  }
  return centers;
}

Palette run_kmeans(std::span<const Rgb> points, std::span<const double> weights, int k, RngStream& rng,
                   const KMeansParams& params, bool parallel) {
  if (k < 1) throw InvalidArgument("k-means needs k >= 1");
  if (points.empty()) throw InvalidArgument("k-means needs at least one point");
  if (weights.size() != points.size()) throw InvalidArgument("k-means weight count mismatch");

  Palette pal;
  pal.k = k;
  pal.centers = seed_plus_plus(points, weights, k, rng);
  const std::size_t kc = pal.centers.size();
  std::vector<int> label(points.size());
  std::vector<double> dist(points.size());

  for (int it = 0; it < params.max_iterations; ++it) {
    assign(points, pal.centers, label, dist, parallel);
    double obj = 0.0;
    std::vector<Rgb> sum(kc, Rgb{0, 0, 0});
    std::vector<double> mass(kc, 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      obj += weights[i] * dist[i];
      const auto c = static_cast<std::size_t>(label[i]);
      for (int ch = 0; ch < 3; ++ch) sum[c][ch] += weights[i] * points[i][ch];
      mass[c] += weights[i];
    }
    pal.objective_history.push_back(obj);
    pal.iterations = it + 1;

    double moved = 0.0;
    for (std::size_t c = 0; c < kc; ++c) {
      if (mass[c] <= 0.0) continue;  // empty cluster keeps its center
      const Rgb next{sum[c][0] / mass[c], sum[c][1] / mass[c], sum[c][2] / mass[c]};
      moved = std::max(moved, std::sqrt(sq_dist(next, pal.centers[c])));
      pal.centers[c] = next;
    }
    if (moved < params.tolerance) break;
  }
  assign(points, pal.centers, label, dist, parallel);
  pal.objective = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) pal.objective += weights[i] * dist[i];
  return pal;
}

std::uint32_t pack(const ImageBuffer& img, int x, int y) {
  return (static_cast<std::uint32_t>(to_u8(img.at(x, y, 0))) << 16) |
         (static_cast<std::uint32_t>(to_u8(img.at(x, y, 1))) << 8) | to_u8(img.at(x, y, 2));
}

}  // namespace

Palette kmeans(std::span<const Rgb> points, std::span<const double> weights, int k, RngStream& rng,
               const KMeansParams& params) {
  return run_kmeans(points, weights, k, rng, params, true);
}

namespace serial {
Palette kmeans(std::span<const Rgb> points, std::span<const double> weights, int k, RngStream& rng,
               const KMeansParams& params) {
  return run_kmeans(points, weights, k, rng, params, false);
}
}  // namespace serial

QuantizeResult quantize_colors(const ImageBuffer& img, int k, RngStream& rng, const KMeansParams& params) {
  if (k < 1) throw InvalidArgument("quantize_colors: k must be >= 1");
  if (img.empty()) throw InvalidArgument("quantize_colors: empty image");
  if (img.channels() < 3) throw InvalidArgument("quantize_colors: needs RGB input");

  std::vector<std::uint32_t> keys;
  keys.reserve(img.pixel_count());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) keys.push_back(pack(img, x, y));
  }
  std::vector<std::uint32_t> uniq = keys;
  std::sort(uniq.begin(), uniq.end());
  std::vector<double> weights;
  std::vector<Rgb> points;
  for (std::size_t i = 0; i < uniq.size();) {
    std::size_t j = i;
    while (j < uniq.size() && uniq[j] == uniq[i]) ++j;
    const std::uint32_t v = uniq[i];
    points.push_back({from_u8(static_cast<std::uint8_t>(v >> 16)), from_u8(static_cast<std::uint8_t>(v >> 8)),
                      from_u8(static_cast<std::uint8_t>(v))});
    weights.push_back(static_cast<double>(j - i));
    uniq[points.size() - 1] = v;
    i = j;
  }
  uniq.resize(points.size());

  QuantizeResult res;
  res.palette = kmeans(points, weights, k, rng, params);
  std::vector<int> label(points.size());
  std::vector<double> dist(points.size());
  assign(points, res.palette.centers, label, dist, true);

  res.image = img;
  std::size_t p = 0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x, ++p) {
      const auto at = std::lower_bound(uniq.begin(), uniq.end(), keys[p]) - uniq.begin();
      const Rgb& c = res.palette.centers[static_cast<std::size_t>(label[static_cast<std::size_t>(at)])];
      for (int ch = 0; ch < 3; ++ch) res.image.at(x, y, ch) = static_cast<float>(c[ch]);
    }
  }
  return res;
}

ChannelHistograms channel_histograms(const ImageBuffer& img, const BinaryMask* region) {
  if (img.channels() < 3) throw InvalidArgument("histograms need RGB input");
  if (region && (region->width() != img.width() || region->height() != img.height())) {
    throw InvalidArgument("histogram region does not match the image");
  }
  ChannelHistograms h;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (region && !region->at(x, y)) continue;
      for (int c = 0; c < 3; ++c) ++h.counts[c][to_u8(img.at(x, y, c))];
      ++h.total;
    }
  }
  return h;
}

LevelLut matching_lut(const ChannelHistograms& src, const ChannelHistograms& ref) {
  if (ref.total == 0) throw InvalidArgument("histogram reference region is empty");
  LevelLut lut{};
  for (int c = 0; c < 3; ++c) {
    std::array<std::uint64_t, 256> cref{};
    std::uint64_t acc = 0;
    for (int w = 0; w < 256; ++w) cref[w] = acc += ref.counts[c][w];
    std::uint64_t csrc = 0;
    int w = 0;
    for (int v = 0; v < 256; ++v) {
      csrc += src.counts[c][v];
      // F_ref(w) >= F_src(v)  <=>  cref[w] * Ns >= csrc * Nr
      const std::uint64_t rhs = csrc * ref.total;
      while (w < 255 && cref[w] * src.total < rhs) ++w;
      lut[c][v] = static_cast<std::uint8_t>(w);
    }
  }
  return lut;
}

namespace {

void apply_lut(ImageBuffer& img, const LevelLut& lut, const BinaryMask* region) {
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (region && !region->at(x, y)) continue;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = from_u8(lut[c][to_u8(img.at(x, y, c))]);
    }
  }
}

}  // namespace

ImageBuffer histogram_match(const ImageBuffer& src, const ImageBuffer& ref) {
  if (src.channels() != 3 || ref.channels() != 3) throw InvalidArgument("histogram_match needs 3-channel images");
  ImageBuffer out = src;
  if (src.empty()) return out;
  apply_lut(out, matching_lut(channel_histograms(src), channel_histograms(ref)), nullptr);
  return out;
}

void histogram_match_region(ImageBuffer& img, const BinaryMask& region, const ChannelHistograms& ref) {
  const ChannelHistograms src = channel_histograms(img, &region);
  if (src.total == 0) return;
  apply_lut(img, matching_lut(src, ref), &region);
}

HarmonizeRecord draw_harmonization(RngStream& rng, std::size_t instance_count, const HarmonizePolicy& policy) {
  HarmonizeRecord r;
  const std::size_t mode = rng.categorical(policy.mode_weights);
  if (mode == 1) {
    if (policy.k_choices.empty()) throw InvalidArgument("no quantization k choices");
    r.mode = HarmonizeMode::Quantize;
    r.k = policy.k_choices[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(policy.k_choices.size()) - 1))];
    r.seed = rng.next_u64();
  } else if (mode == 2 && instance_count > 0) {
    r.mode = HarmonizeMode::HistogramMatch;
    r.reference_instance = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(instance_count) - 1));
  }
  return r;
}

AnnotatedSample harmonize_sample(const AnnotatedSample& sample, const HarmonizeRecord& record,
                                 const KMeansParams& params) {
  AnnotatedSample out = sample;
  switch (record.mode) {
    case HarmonizeMode::None:
      break;
    case HarmonizeMode::Quantize: {
      RngStream rng(record.seed);
      out.image = quantize_colors(sample.image, record.k, rng, params).image;
      break;
    }
    case HarmonizeMode::HistogramMatch: {
      if (sample.instances.empty()) throw InvalidArgument("histogram matching needs at least one instance");
      if (record.reference_instance < 0 ||
          static_cast<std::size_t>(record.reference_instance) >= sample.instances.size()) {
        throw InvalidArgument("histogram reference instance out of range");
      }
      const auto ref_idx = static_cast<std::size_t>(record.reference_instance);
      const ChannelHistograms ref = channel_histograms(sample.image, &sample.instances[ref_idx].modal_mask);
      BinaryMask background(sample.image.width(), sample.image.height(), true);
      for (std::size_t i = 0; i < sample.instances.size(); ++i) {
        background.subtract(sample.instances[i].modal_mask);
        if (i != ref_idx) histogram_match_region(out.image, sample.instances[i].modal_mask, ref);
      }
      histogram_match_region(out.image, background, ref);
      break;
    }
  }
  return out;
}

}  // namespace toonsynth
