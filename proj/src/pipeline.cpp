#include "toonsynth/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>

#include <omp.h>

#include "toonsynth/error.hpp"
#include "toonsynth/harmonizer.hpp"
#include "toonsynth/imaging/color.hpp"
#include "toonsynth/imaging/filter.hpp"
#include "toonsynth/imaging/png.hpp"
#include "toonsynth/imaging/warp.hpp"

namespace toonsynth {

namespace fs = std::filesystem;

SynthesisInputs load_inputs(const RunConfig& config) {
  if (config.pools.foreground_manifest.empty()) throw InvalidArgument("config names no foreground manifest");
  if (config.pools.backgrounds.empty()) throw InvalidArgument("config names no background pool");
  SynthesisInputs in{AssetPools(load_foreground_pool(config.pools.foreground_manifest),
                                load_backgrounds(config.pools.backgrounds)),
                     {}};
  if (!config.pools.guide_boxes.empty()) in.guides = load_guide_boxes(config.pools.guide_boxes);
  return in;
}

namespace {

constexpr std::uint64_t kFallbackFork = 1000;

struct Placed {
  std::vector<Placement> placements;
  std::vector<InstanceAsset> assets;  // augmented, parallel to placements
  std::int64_t guide_photo = -1;
};

Placed place_photo_guided(std::vector<AugmentedAsset>& aug, const RunConfig& cfg, const GuideBundle& guides,
                          RngStream& rng) {
  const auto eligible = eligible_photos(guides, aug.size());
  if (eligible.empty()) {
    throw InsufficientGuides("no guide photo holds " + std::to_string(aug.size()) + " boxes");
  }
  const std::size_t photo = eligible[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(eligible.size()) - 1))];
  const auto boxes = scale_guide_boxes(guides.photos[photo], cfg.canvas);
  const int cap = static_cast<int>(std::lround(cfg.guided_long_side_cap * cfg.canvas));
  Placed p;
  p.placements = photo_guided_placement(aug, boxes, cap);
  for (auto& a : aug) p.assets.push_back(std::move(a.asset));
  p.guide_photo = static_cast<std::int64_t>(photo);
  return p;
}

Placed place_side_by_side(std::vector<AugmentedAsset>& aug, const RunConfig& cfg, RngStream& rng) {
  std::vector<Size2> sizes;
  for (const auto& a : aug) sizes.push_back({a.asset.rgba.width(), a.asset.rgba.height()});
  SideBySideParams params;
  params.canvas = cfg.canvas;
  params.window = IouWindow::from_doubles(cfg.iou_min, cfg.iou_max);
  params.constraint = cfg.side_by_side_constraint;
  const SideBySideResult r = side_by_side_boxes(sizes, rng, params);
  Placed p;
  for (std::size_t step = 0; step < r.order.size(); ++step) {
    auto& a = aug[r.order[step]];
    p.placements.push_back({a.asset.provenance.asset_id, a.record, r.boxes[step], static_cast<int>(step), std::nullopt});
    p.assets.push_back(std::move(a.asset));
  }
  return p;
}

AnnotatedSample finish_sample(AnnotatedSample sample, const HarmonizeRecord& record, const KMeansParams& kmeans) {
  if (record.mode != HarmonizeMode::None) sample = harmonize_sample(sample, record, kmeans);
  quantize_to_u8_levels(sample.image);
  return sample;
}

}  // namespace

SynthesizedSample synthesize_sample(std::uint64_t index, const RunConfig& cfg, const SynthesisInputs& in) {
  const auto& fgs = in.pools.foregrounds();
  const auto& bgs = in.pools.backgrounds();
  if (fgs.empty()) throw InvalidArgument("foreground pool is empty");
  if (bgs.empty()) throw InvalidArgument("background pool is empty");
  const std::uint64_t seed = cfg.master_seed;

  SceneLayout layout;
  layout.canvas = cfg.canvas;
  layout.master_seed = seed;
  layout.sample_index = index;

  RngStream count_rng(seed, index, StreamTag::SubjectCount);
  const int n = sample_subject_count(count_rng, cfg.subjects);

  RngStream bg_rng(seed, index, StreamTag::Background);
  const Background& bg =
      bgs[static_cast<std::size_t>(bg_rng.uniform_int(0, static_cast<std::int64_t>(bgs.size()) - 1))];
  layout.background_id = bg.id;
  layout.background_crop = draw_background_crop(bg.image.width(), bg.image.height(), cfg.canvas, bg_rng);

  RngStream choice_rng(seed, index, StreamTag::AssetChoice);
  std::vector<const InstanceAsset*> chosen;
  for (int i = 0; i < n; ++i) {
    chosen.push_back(&fgs[static_cast<std::size_t>(choice_rng.uniform_int(0, static_cast<std::int64_t>(fgs.size()) - 1))]);
  }

  RngStream strategy_rng(seed, index, StreamTag::Strategy);
  const Strategy first = strategy_rng.categorical(cfg.strategy_weights) == 0 ? Strategy::PhotoGuided : Strategy::SideBySide;

  AugmentPolicy policy = cfg.augment;
  policy.canvas = cfg.canvas;
  std::optional<Placed> placed;
  std::string last_kind, report;
  int attempts = 0;
  for (int pass = 0; pass < 2 && !placed; ++pass) {
    const Strategy strategy =
        pass == 0 ? first : (first == Strategy::PhotoGuided ? Strategy::SideBySide : Strategy::PhotoGuided);
    std::string pass_message;
    for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
      ++attempts;
      const std::uint64_t fork = static_cast<std::uint64_t>(pass) * kFallbackFork + static_cast<std::uint64_t>(attempt);
      RngStream aug_rng = RngStream(seed, index, StreamTag::Augment).fork(fork);
      RngStream place_rng = RngStream(seed, index, StreamTag::Placement).fork(fork);
      std::vector<AugmentedAsset> aug;
      for (const auto* a : chosen) aug.push_back(augment(*a, aug_rng, policy));
      try {
        placed = strategy == Strategy::PhotoGuided ? place_photo_guided(aug, cfg, in.guides, place_rng)
                                                   : place_side_by_side(aug, cfg, place_rng);
        layout.strategy = strategy;
        layout.strategy_fallback = pass == 1;
      } catch (const InsufficientGuides& e) {
        last_kind = e.kind();
        pass_message = e.kind() + ": " + e.what();
        break;  // independent of the augmentation; retrying cannot help
      } catch (const NoFeasiblePosition& e) {
        last_kind = e.kind();
        pass_message = e.kind() + ": " + e.what();
      }
    }
    if (!placed) report += (report.empty() ? "" : "; ") + to_string(strategy) + " " + pass_message;
  }
  if (!placed) {
    throw Error(last_kind, "sample " + std::to_string(index) + ": placement failed after " +
                               std::to_string(attempts) + " attempts (" + report + ")");
  }
  layout.attempts = attempts;
  layout.placements = std::move(placed->placements);
  layout.guide_photo = placed->guide_photo;

  AnnotatedSample sample = rasterize(layout, in.pools, &placed->assets);
  RngStream harm_rng(seed, index, StreamTag::Harmonize);
  layout.harmonization = draw_harmonization(harm_rng, sample.instances.size(), cfg.harmonize);
  return {finish_sample(std::move(sample), layout.harmonization, cfg.harmonize.kmeans), std::move(layout)};
}

AnnotatedSample replay_layout(const SceneLayout& layout, const AssetPools& pools, const KMeansParams& kmeans) {
  return finish_sample(rasterize(layout, pools), layout.harmonization, kmeans);
}

// ---------------------------------------------------------------------------

ImageBuffer contact_sheet(std::span<const AnnotatedSample> samples, int tile) {
  if (samples.empty()) return ImageBuffer(tile, tile, 3);
  const int n = static_cast<int>(samples.size());
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int rows = (n + cols - 1) / cols;
  ImageBuffer sheet(cols * tile, rows * tile, 3);
  for (int i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    const ImageBuffer thumb = resize_bilinear(s.image, tile, tile);
    const int ox = (i % cols) * tile, oy = (i / cols) * tile;
    for (int y = 0; y < tile; ++y) {
      for (int x = 0; x < tile; ++x) {
        std::array<float, 3> px{thumb.at(x, y, 0), thumb.at(x, y, 1), thumb.at(x, y, 2)};
        const int mx = std::min(s.image.width() - 1, x * s.image.width() / tile);
        const int my = std::min(s.image.height() - 1, y * s.image.height() / tile);
        for (std::size_t k = 0; k < s.instances.size(); ++k) {
          if (!s.instances[k].modal_mask.at(mx, my)) continue;
          const auto tint = hsv_to_rgb(HsvPixel{static_cast<float>(std::fmod(0.618034 * static_cast<double>(k), 1.0)), 0.9f, 1.0f});
          for (int c = 0; c < 3; ++c) px[c] = 0.5f * px[c] + 0.5f * tint[c];
        }
        for (int c = 0; c < 3; ++c) sheet.at(ox + x, oy + y, c) = px[c];
      }
    }
  }
  return sheet;
}

SynthesisSummary run_synthesis(const RunConfig& cfg, const SynthesisInputs& in, const fs::path& out_dir, int preview) {
  validate(cfg);
  if (cfg.workers > 0) omp_set_num_threads(cfg.workers);
  DatasetWriter writer(out_dir);
  SynthesisSummary summary;
  std::vector<AnnotatedSample> previews;

  const std::uint64_t total = cfg.sample_count;
  const auto batch = static_cast<std::uint64_t>(cfg.batch_size);
  for (std::uint64_t start = 0; start < total; start += batch) {
    const std::uint64_t count = std::min(batch, total - start);
    std::vector<std::optional<SynthesizedSample>> results(count);
    std::vector<SynthesisFailure> errors(count);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
      const std::uint64_t index = start + static_cast<std::uint64_t>(i);
      try {
        results[static_cast<std::size_t>(i)] = synthesize_sample(index, cfg, in);
      } catch (const Error& e) {
        errors[static_cast<std::size_t>(i)] = {index, e.kind(), e.what()};
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(i)] = {index, "InternalError", e.what()};
      }
    }
    for (std::uint64_t i = 0; i < count; ++i) {
      if (!results[i]) {
        summary.failures.push_back(errors[i]);
        continue;
      }
      writer.add(results[i]->sample, results[i]->layout);
      ++summary.written;
      if (static_cast<int>(previews.size()) < preview) previews.push_back(std::move(results[i]->sample));
    }
  }
  writer.finish();
  if (preview > 0) write_png(out_dir / "preview.png", contact_sheet(previews));
  return summary;
}

// ---------------------------------------------------------------------------

ExtractionSummary run_extraction(const fs::path& frames_dir, double source_fps, const fs::path& out_dir,
                                 const ExtractConfig& cfg) {
  if (!fs::is_directory(frames_dir)) throw IoError("not a directory: " + frames_dir.string());
  std::vector<fs::path> frames;
  for (const auto& e : fs::directory_iterator(frames_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") frames.push_back(e.path());
  }
  std::sort(frames.begin(), frames.end());
  if (frames.empty()) throw InvalidArgument("no PNG frames in " + frames_dir.string());

  ExtractionSummary summary;
  summary.frames_found = frames.size();
  summary.manifest = out_dir / "pool.json";
  fs::create_directories(out_dir);
  PoolManifest manifest;
  if (fs::exists(summary.manifest)) manifest = read_pool_manifest(summary.manifest);

  struct Keyed {
    ImageBuffer original, filtered;
    std::optional<KeyingEstimate> key;
  };
  const auto selected = sample_frames(frames, source_fps, cfg.target_hz);
  std::vector<Keyed> keyed;
  for (const auto& f : selected) {
    FrameReport rep{f, "ok", "", 0.0, 0.0, ""};
    Keyed k;
    try {
      k.original = read_png(f);
      if (k.original.channels() == 4 || k.original.channels() == 1) {
        ImageBuffer rgb(k.original.width(), k.original.height(), 3);
        for (int y = 0; y < rgb.height(); ++y) {
          for (int x = 0; x < rgb.width(); ++x) {
            for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = k.original.at(x, y, k.original.channels() == 1 ? 0 : c);
          }
        }
        k.original = std::move(rgb);
      }
      k.filtered = bilateral_filter(k.original, cfg.bilateral_diameter, cfg.bilateral_sigma);
      k.key = estimate_keying_hue(k.filtered, cfg.keying);
      rep.coverage = k.key->coverage;
      rep.hue = k.key->hue_star;
    } catch (const Error& e) {
      rep.status = e.kind();
      rep.message = e.what();
    }
    summary.frames.push_back(rep);
    keyed.push_back(std::move(k));
  }

  if (cfg.key_mode == KeyMode::PerVideo) {
    // Majority winning window over the video; its frames' hues are averaged
    // on the circle and the resulting key replaces every per-frame key.
    std::map<int, std::vector<float>> votes;
    for (const auto& k : keyed) {
      if (k.key) votes[k.key->window_start_bin].push_back(k.key->hue_star);
    }
    if (!votes.empty()) {
      auto best = votes.begin();
      for (auto it = votes.begin(); it != votes.end(); ++it) {
        if (it->second.size() > best->second.size()) best = it;
      }
      double sx = 0.0, sy = 0.0;
      for (float h : best->second) {
        sx += std::cos(2.0 * M_PI * h);
        sy += std::sin(2.0 * M_PI * h);
      }
      double hue = std::atan2(sy, sx) / (2.0 * M_PI);
      if (hue < 0.0) hue += 1.0;
      for (auto& k : keyed) {
        if (!k.key) continue;
        k.key->hue_star = static_cast<float>(hue >= 1.0 ? 0.0 : hue);
        k.key->window_start_bin = best->first;
      }
    }
  }

  std::size_t next = manifest.entries.size();
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    auto& k = keyed[i];
    auto& rep = summary.frames[i];
    if (!k.key) continue;
    try {
      InstanceAsset asset = extract_instance(k.filtered, *k.key, cfg.keying, &k.original);
      if (cfg.min_area > 0) asset = apply_mask(asset, despeckle(asset.mask, cfg.min_area));
      char stem[32];
      std::snprintf(stem, sizeof stem, "%04zu", next);
      const std::string rgba_name = std::string(stem) + ".rgba.png", mask_name = std::string(stem) + ".mask.png";
      write_png(out_dir / rgba_name, asset.rgba);
      write_mask_png(out_dir / mask_name, asset.mask);
      PoolEntry e{"asset_" + std::string(stem), rgba_name, mask_name, AssetSource::ChromaKey,
                  asset.provenance.native_width, asset.provenance.native_height, rep.frame.string()};
      rep.asset_id = e.asset_id;
      manifest.entries.push_back(std::move(e));
      ++next;
      ++summary.added;
    } catch (const Error& e) {
      rep.status = e.kind();
      rep.message = e.what();
    }
  }
  if (summary.added > 0) write_pool_manifest(summary.manifest, manifest);
  return summary;
}

}  // namespace toonsynth
