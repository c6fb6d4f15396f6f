#include "toonsynth/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>

#include <json.hpp>

#include "toonsynth/dataset_io.hpp"
#include "toonsynth/error.hpp"

namespace toonsynth {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(KeyMode m) { return m == KeyMode::PerFrame ? "per_frame" : "per_video"; }

KeyMode key_mode_from_string(const std::string& s) {
  if (s == "per_frame") return KeyMode::PerFrame;
  if (s == "per_video") return KeyMode::PerVideo;
  throw FormatError("unknown key mode '" + s + "'");
}

namespace {

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw InvalidArgument("config field '" + field + "': " + why);
}

void require_probability_group(std::span<const double> w, const std::string& field) {
  double sum = 0.0;
  for (double v : w) {
    require(v >= 0.0 && std::isfinite(v), field, "weights must be finite and non-negative");
    sum += v;
  }
  require(std::fabs(sum - 1.0) < 1e-9, field, "weights must sum to 1");
}

void require_probability(double p, const std::string& field) {
  require(p >= 0.0 && p <= 1.0, field, "must lie in [0, 1]");
}

// Reads the present keys of one JSON object and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw FormatError(where_ + ": expected an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw FormatError(where_ + ": unknown field '" + k + "'");
    }
  }

  template <class T>
  void get(const std::string& key, T& dst) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw FormatError(where_ + "." + key + ": " + e.what());
    }
  }

  template <class F>
  void with(const std::string& key, F&& f) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    Section s(j_.at(key), where_ + "." + key);
    f(s);
  }

  template <class E>
  void get_enum(const std::string& key, E& dst, E (*parse)(const std::string&)) {
    std::string s;
    if (!j_.contains(key)) return;
    get(key, s);
    dst = parse(s);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

SideBySideConstraint constraint_from_string(const std::string& s) {
  if (s == "previous") return SideBySideConstraint::Previous;
  if (s == "all_prior") return SideBySideConstraint::AllPrior;
  throw FormatError("unknown side-by-side constraint '" + s + "'");
}

std::string to_string(SideBySideConstraint c) { return c == SideBySideConstraint::Previous ? "previous" : "all_prior"; }

loss::GiouMode giou_mode_from_string(const std::string& s) {
  if (s == "standard") return loss::GiouMode::Standard;
  if (s == "mean_giou") return loss::GiouMode::MeanGiou;
  throw FormatError("unknown giou mode '" + s + "'");
}

loss::Reduction reduction_from_string(const std::string& s) {
  if (s == "sum") return loss::Reduction::Sum;
  if (s == "mean") return loss::Reduction::Mean;
  throw FormatError("unknown reduction '" + s + "'");
}

}  // namespace

void validate(const RunConfig& c) {
  require(c.canvas > 0, "canvas", "must be positive");
  require(c.subjects.lambda > 0.0, "subjects.lambda", "must be positive");
  require(c.subjects.min_subjects >= 1, "subjects.min", "must be >= 1");
  require(c.subjects.max_subjects >= c.subjects.min_subjects, "subjects.max", "must be >= subjects.min");
  require_probability_group(c.strategy_weights, "strategy_weights");
  require_probability_group(c.harmonize.mode_weights, "harmonization.weights");
  require(!c.harmonize.k_choices.empty(), "harmonization.k_choices", "must not be empty");
  for (int k : c.harmonize.k_choices) require(k >= 1, "harmonization.k_choices", "every k must be >= 1");
  require(c.harmonize.kmeans.max_iterations >= 1, "harmonization.kmeans_max_iterations", "must be >= 1");
  require_probability(c.augment.flip_probability, "augment.flip_probability");
  require_probability(c.augment.warp_probability, "augment.warp_probability");
  require_probability(c.augment.grid_probability, "augment.grid_probability");
  require(c.augment.grid_cells >= 1, "augment.grid_cells", "must be >= 1");
  require(c.augment.grid_limit_lo <= c.augment.grid_limit_hi && c.augment.grid_limit_lo > -1.0, "augment.grid_limit",
          "needs -1 < lo <= hi");
  require(c.augment.max_rotation_deg >= 0.0, "augment.max_rotation_deg", "must be >= 0");
  require(c.augment.long_side_min > 0.0 && c.augment.long_side_min <= c.augment.long_side_max &&
              c.augment.long_side_max <= 1.0,
          "augment.long_side_range", "needs 0 < lo <= hi <= 1");
  require(c.iou_min >= 0.0 && c.iou_min <= c.iou_max && c.iou_max <= 1.0, "placement.iou", "needs 0 <= min <= max <= 1");
  require(c.guided_long_side_cap > 0.0 && c.guided_long_side_cap <= 1.0, "placement.guided_long_side_cap",
          "must lie in (0, 1]");
  require(c.max_attempts >= 1, "max_attempts", "must be >= 1");
  require(c.workers >= 0, "workers", "must be >= 0");
  require(c.batch_size >= 1, "batch_size", "must be >= 1");
  require(c.extract.bilateral_diameter >= 3 && c.extract.bilateral_diameter % 2 == 1, "extract.bilateral_diameter",
          "must be odd and >= 3");
  require(c.extract.bilateral_sigma > 0.0, "extract.bilateral_sigma", "must be positive");
  require(c.extract.target_hz > 0.0, "extract.target_hz", "must be positive");
  require(c.extract.keying.bins >= 1, "extract.hue_bins", "must be >= 1");
  require(c.loss.dice_size >= 1, "loss.dice_size", "must be >= 1");
  require(c.loss.ppa_pool >= 1 && c.loss.ppa_pool % 2 == 1, "loss.ppa_pool", "must be odd");
  require(!c.anchors.sizes.empty(), "loss.anchor_grids", "must not be empty");
}

namespace {

// Shortest decimal that reads back as the same float, so 0.95f prints as 0.95.
double shortest(float v) {
  char buf[32];
  const auto end = std::to_chars(buf, buf + sizeof buf, v).ptr;
  return std::strtod(std::string(buf, end).c_str(), nullptr);
}

}  // namespace

std::string run_config_to_json(const RunConfig& c) {
  const auto& a = c.augment;
  const auto& h = c.harmonize;
  const auto& e = c.extract;
  const auto& l = c.loss;
  ordered_json j{
      {"master_seed", c.master_seed},
      {"sample_count", c.sample_count},
      {"canvas", c.canvas},
      {"workers", c.workers},
      {"batch_size", c.batch_size},
      {"max_attempts", c.max_attempts},
      {"subjects", {{"lambda", c.subjects.lambda}, {"min", c.subjects.min_subjects}, {"max", c.subjects.max_subjects}}},
      {"strategy_weights", {{"photo_guided", c.strategy_weights[0]}, {"side_by_side", c.strategy_weights[1]}}},
      {"placement",
       {{"iou_min", c.iou_min},
        {"iou_max", c.iou_max},
        {"constraint", to_string(c.side_by_side_constraint)},
        {"guided_long_side_cap", c.guided_long_side_cap}}},
      {"augment",
       {{"flip_probability", a.flip_probability},
        {"warp_probability", a.warp_probability},
        {"grid_probability", a.grid_probability},
        {"grid_cells", a.grid_cells},
        {"grid_limit", {a.grid_limit_lo, a.grid_limit_hi}},
        {"max_rotation_deg", a.max_rotation_deg},
        {"long_side_range", {a.long_side_min, a.long_side_max}}}},
      {"harmonization",
       {{"weights",
         {{"none", h.mode_weights[0]}, {"quantize", h.mode_weights[1]}, {"histogram_match", h.mode_weights[2]}}},
        {"k_choices", h.k_choices},
        {"kmeans_max_iterations", h.kmeans.max_iterations},
        {"kmeans_tolerance", h.kmeans.tolerance}}},
      {"pools",
       {{"foreground_manifest", c.pools.foreground_manifest.string()},
        {"backgrounds", c.pools.backgrounds.string()},
        {"guide_boxes", c.pools.guide_boxes.string()}}},
      {"extract",
       {{"bilateral_diameter", e.bilateral_diameter},
        {"bilateral_sigma", e.bilateral_sigma},
        {"target_hz", e.target_hz},
        {"min_area", e.min_area},
        {"key_mode", to_string(e.key_mode)},
        {"hue_bins", e.keying.bins},
        {"hue_half_window", e.keying.half_window},
        {"search_gate", {shortest(e.keying.search_s_min), shortest(e.keying.search_v_min)}},
        {"extract_gate", {shortest(e.keying.extract_s_min), shortest(e.keying.extract_v_min)}}}},
      {"loss",
       {{"stage1_weights", {l.stage1.box, l.stage1.conf, l.stage1.mask}},
        {"qfl_beta", l.qfl_beta},
        {"clip_eps", l.clip_eps},
        {"dice_eps", l.dice_eps},
        {"dice_size", l.dice_size},
        {"ppa_level_weights", l.ppa_level_weights},
        {"ppa_pool", l.ppa_pool},
        {"ppa_boundary_gain", l.ppa_boundary_gain},
        {"giou_mode", l.giou_mode == loss::GiouMode::Standard ? "standard" : "mean_giou"},
        {"feature_reduction", l.feature_reduction == loss::Reduction::Sum ? "sum" : "mean"},
        {"assign_center_weight", l.assign_center_weight},
        {"anchor_input_size", c.anchors.input_size},
        {"anchor_grids", c.anchors.sizes}}}};
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text, const fs::path& base_dir, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(origin + ": " + e.what());
  }
  RunConfig c;
  {
    Section s(j, origin);
    s.get("master_seed", c.master_seed);
    s.get("sample_count", c.sample_count);
    s.get("canvas", c.canvas);
    s.get("workers", c.workers);
    s.get("batch_size", c.batch_size);
    s.get("max_attempts", c.max_attempts);
    s.with("subjects", [&](Section& t) {
      t.get("lambda", c.subjects.lambda);
      t.get("min", c.subjects.min_subjects);
      t.get("max", c.subjects.max_subjects);
    });
    s.with("strategy_weights", [&](Section& t) {
      t.get("photo_guided", c.strategy_weights[0]);
      t.get("side_by_side", c.strategy_weights[1]);
    });
    s.with("placement", [&](Section& t) {
      t.get("iou_min", c.iou_min);
      t.get("iou_max", c.iou_max);
      t.get_enum("constraint", c.side_by_side_constraint, constraint_from_string);
      t.get("guided_long_side_cap", c.guided_long_side_cap);
    });
    s.with("augment", [&](Section& t) {
      auto& a = c.augment;
      t.get("flip_probability", a.flip_probability);
      t.get("warp_probability", a.warp_probability);
      t.get("grid_probability", a.grid_probability);
      t.get("grid_cells", a.grid_cells);
      std::array<double, 2> lim{a.grid_limit_lo, a.grid_limit_hi}, ls{a.long_side_min, a.long_side_max};
      t.get("grid_limit", lim);
      t.get("max_rotation_deg", a.max_rotation_deg);
      t.get("long_side_range", ls);
      a.grid_limit_lo = lim[0];
      a.grid_limit_hi = lim[1];
      a.long_side_min = ls[0];
      a.long_side_max = ls[1];
    });
    s.with("harmonization", [&](Section& t) {
      auto& h = c.harmonize;
      t.with("weights", [&](Section& w) {
        w.get("none", h.mode_weights[0]);
        w.get("quantize", h.mode_weights[1]);
        w.get("histogram_match", h.mode_weights[2]);
      });
      t.get("k_choices", h.k_choices);
      t.get("kmeans_max_iterations", h.kmeans.max_iterations);
      t.get("kmeans_tolerance", h.kmeans.tolerance);
    });
    s.with("pools", [&](Section& t) {
      std::string fg, bg, guides;
      t.get("foreground_manifest", fg);
      t.get("backgrounds", bg);
      t.get("guide_boxes", guides);
      auto res = [&](const std::string& p) { return p.empty() || fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
      c.pools = {res(fg), res(bg), res(guides)};
    });
    s.with("extract", [&](Section& t) {
      auto& e = c.extract;
      t.get("bilateral_diameter", e.bilateral_diameter);
      t.get("bilateral_sigma", e.bilateral_sigma);
      t.get("target_hz", e.target_hz);
      t.get("min_area", e.min_area);
      t.get_enum("key_mode", e.key_mode, key_mode_from_string);
      t.get("hue_bins", e.keying.bins);
      t.get("hue_half_window", e.keying.half_window);
      std::array<float, 2> sg{e.keying.search_s_min, e.keying.search_v_min};
      std::array<float, 2> eg{e.keying.extract_s_min, e.keying.extract_v_min};
      t.get("search_gate", sg);
      t.get("extract_gate", eg);
      e.keying.search_s_min = sg[0];
      e.keying.search_v_min = sg[1];
      e.keying.extract_s_min = eg[0];
      e.keying.extract_v_min = eg[1];
    });
    s.with("loss", [&](Section& t) {
      auto& l = c.loss;
      std::array<double, 3> w{l.stage1.box, l.stage1.conf, l.stage1.mask};
      t.get("stage1_weights", w);
      l.stage1 = {w[0], w[1], w[2]};
      t.get("qfl_beta", l.qfl_beta);
      t.get("clip_eps", l.clip_eps);
      t.get("dice_eps", l.dice_eps);
      t.get("dice_size", l.dice_size);
      t.get("ppa_level_weights", l.ppa_level_weights);
      t.get("ppa_pool", l.ppa_pool);
      t.get("ppa_boundary_gain", l.ppa_boundary_gain);
      t.get_enum("giou_mode", l.giou_mode, giou_mode_from_string);
      t.get_enum("feature_reduction", l.feature_reduction, reduction_from_string);
      t.get("assign_center_weight", l.assign_center_weight);
      t.get("anchor_input_size", c.anchors.input_size);
      t.get("anchor_grids", c.anchors.sizes);
    });
  }
  c.augment.canvas = c.canvas;
  validate(c);
  return c;
}

RunConfig read_run_config(const fs::path& path) {
  return run_config_from_json(read_text_file(path), path.parent_path(), path.string());
}

}  // namespace toonsynth
