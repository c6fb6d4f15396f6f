#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "toonsynth/config.hpp"
#include "toonsynth/dataset_io.hpp"
#include "toonsynth/error.hpp"
#include "toonsynth/eval.hpp"
#include "toonsynth/imaging/png.hpp"
#include "toonsynth/pipeline.hpp"
#include "toonsynth/verify.hpp"

namespace fs = std::filesystem;
using namespace toonsynth;

namespace {

bool g_json_errors = false;

int report_error(const std::string& kind, const std::string& message, int code) {
  if (g_json_errors) {
    nlohmann::ordered_json j;
    j["error"] = kind;
    j["message"] = message;
    j["exit_code"] = code;
    std::cerr << j.dump() << "\n";
  } else {
    std::cerr << "toonsynth: " << kind << ": " << message << "\n";
  }
  return code;
}

// TOONSYNTH_THREADS wins over the config, --threads wins over both.
int resolve_threads(int flag, int config_workers) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("TOONSYNTH_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    throw InvalidArgument(std::string("TOONSYNTH_THREADS must be a positive integer, got '") + env + "'");
  }
  return config_workers;
}

int cmd_extract(const fs::path& frames, double fps, const fs::path& out, long min_area, const std::string& key_mode) {
  ExtractConfig cfg;
  if (min_area >= 0) cfg.min_area = static_cast<std::size_t>(min_area);
  cfg.key_mode = key_mode_from_string(key_mode);
  const ExtractionSummary s = run_extraction(frames, fps, out, cfg);
  std::printf("%zu frames found, %zu sampled\n", s.frames_found, s.frames.size());
  for (const auto& f : s.frames) {
    if (f.status == "ok") {
      std::printf("  %-40s coverage %.4f  hue %.4f  %s\n", f.frame.filename().string().c_str(), f.coverage, f.hue,
                  f.asset_id.c_str());
    } else {
      std::printf("  %-40s %s: %s\n", f.frame.filename().string().c_str(), f.status.c_str(), f.message.c_str());
    }
  }
  if (s.added == 0) {
    std::string kind = "EmptyForeground";
    for (const auto& f : s.frames) {
      if (f.status != "ok") {
        kind = f.status;
        break;
      }
    }
    return report_error(kind, "no instances extracted from " + frames.string(), 1);
  }
  std::printf("%zu assets added to %s\n", s.added, s.manifest.string().c_str());
  return 0;
}

int cmd_synthesize(const fs::path& config_path, const fs::path& out, int preview, const fs::path& replay,
                   int threads) {
  RunConfig cfg = read_run_config(config_path);
  cfg.workers = resolve_threads(threads, cfg.workers);
  if (!replay.empty()) {
    const SceneLayout layout = read_layout(replay);
    const SynthesisInputs in = load_inputs(cfg);
    const AnnotatedSample s = replay_layout(layout, in.pools, cfg.harmonize.kmeans);
    fs::create_directories(out.parent_path().empty() ? fs::path(".") : out.parent_path());
    write_png(out, s.image);
    std::printf("replayed sample %llu into %s\n", static_cast<unsigned long long>(layout.sample_index),
                out.string().c_str());
    return 0;
  }
  const SynthesisInputs in = load_inputs(cfg);
  const SynthesisSummary s = run_synthesis(cfg, in, out, preview);
  std::printf("%zu samples written to %s\n", s.written, out.string().c_str());
  for (const auto& f : s.failures) {
    std::printf("  sample %llu failed: %s: %s\n", static_cast<unsigned long long>(f.index), f.kind.c_str(),
                f.message.c_str());
  }
  if (!s.failures.empty()) {
    return report_error("SynthesisFailure", std::to_string(s.failures.size()) + " samples failed", 1);
  }
  return 0;
}

int cmd_evaluate(const fs::path& gt_path, const fs::path& pred_path, const fs::path& report_path, int threads) {
  const int n = resolve_threads(threads, 0);
  if (n > 0) omp_set_num_threads(n);
  const CocoDocument gt = read_coco(gt_path);
  const CocoDocument pred = read_predictions(pred_path);
  const auto gts = ground_truth_from_coco(gt);
  const auto dets = detections_from_coco(pred, gt);
  const EvalReport report = evaluate(dets, gts);
  if (!report_path.empty()) write_text_file(report_path, eval_report_json(report));
  std::printf("Box AP       %.4f\n", report.box.mean);
  if (report.mask) std::printf("Mask AP      %.4f\n", report.mask->mean);
  if (report.boundary) std::printf("Boundary AP  %.4f\n", report.boundary->mean);
  return 0;
}

int cmd_verify(const VerifyOptions& opts, int threads) {
  const int n = resolve_threads(threads, 0);
  if (n > 0) omp_set_num_threads(n);
  const auto results = run_verify(opts);
  int failed = 0;
  double total = 0.0;
  for (const auto& r : results) {
    std::printf("%s  %-44s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds, r.detail.c_str());
    failed += !r.passed;
    total += r.seconds;
  }
  std::printf("%zu checks, %d failed, %.2fs\n", results.size(), failed, total);
  if (failed > 0) {
    std::string names;
    for (const auto& r : results) {
      if (!r.passed) names += (names.empty() ? "" : ", ") + r.name;
    }
    return report_error("CheckFailure", names, 1);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic cartoon segmentation data: extract, synthesize, evaluate, verify"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json-errors", g_json_errors, "Print errors as one JSON object on stderr");
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (overrides TOONSYNTH_THREADS and the config)")
      ->check(CLI::NonNegativeNumber);

  auto* extract = app.add_subcommand("extract", "Build a foreground pool from chroma-key frames");
  fs::path frames, extract_out;
  double fps = 0.0;
  long min_area = -1;
  std::string key_mode = "per_frame";
  extract->add_option("--frames", frames, "Directory of numbered PNG frames")->required();
  extract->add_option("--fps", fps, "Source frame rate")->required()->check(CLI::PositiveNumber);
  extract->add_option("--out", extract_out, "Pool directory")->required();
  extract->add_option("--min-area", min_area, "Despeckle threshold in pixels");
  extract->add_option("--key-mode", key_mode, "per_frame or per_video");

  auto* synth = app.add_subcommand("synthesize", "Compose annotated samples");
  fs::path config_path, synth_out, replay;
  int preview = 0;
  synth->add_option("--config", config_path, "Run config JSON")->required();
  synth->add_option("--out", synth_out, "Output directory, or image path with --replay")->required();
  synth->add_option("--preview", preview, "Contact sheet of the first N samples")->check(CLI::NonNegativeNumber);
  synth->add_option("--replay", replay, "Regenerate one sample from its layout JSON");

  auto* eval = app.add_subcommand("evaluate", "Box, Mask and Boundary AP");
  fs::path gt_path, pred_path, report_path;
  eval->add_option("--gt", gt_path, "Ground-truth COCO JSON")->required();
  eval->add_option("--pred", pred_path, "Predictions: COCO JSON or results array")->required();
  eval->add_option("--report", report_path, "Report JSON path");

  auto* verify = app.add_subcommand("verify", "Gradient, oracle and determinism checks");
  VerifyOptions vopts;
  verify->add_option("--inject-fault", vopts.fault, "Deliberately break a kernel (giou-grad)")
      ->check(CLI::IsMember({"", "giou-grad"}));
  verify->add_option("--seed", vopts.seed, "Seed for random check inputs");
  verify->add_option("--points", vopts.points, "Random points per gradient check")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.what(), 2);
  }

  try {
    if (*extract) return cmd_extract(frames, fps, extract_out, min_area, key_mode);
    if (*synth) return cmd_synthesize(config_path, synth_out, preview, replay, threads);
    if (*eval) return cmd_evaluate(gt_path, pred_path, report_path, threads);
    if (*verify) return cmd_verify(vopts, threads);
  } catch (const Error& e) {
    return report_error(e.kind(), e.what(), 1);
  } catch (const std::exception& e) {
    return report_error("RuntimeError", e.what(), 1);
  }
  return 2;
}
