#include "toonsynth/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "toonsynth/error.hpp"
#include "toonsynth/imaging/png.hpp"

namespace toonsynth {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string read_text_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

namespace {

json parse(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

// Wraps field access so schema errors carry the document name.
template <class F>
auto guarded(const std::string& origin, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

ordered_json rle_json(const RleMask& r) { return {{"size", {r.height, r.width}}, {"counts", r.counts}}; }

RleMask rle_from_json(const json& j, const std::string& origin) {
  if (j.at("counts").is_string()) throw FormatError(origin + ": compressed RLE strings are not supported");
  RleMask r;
  r.height = j.at("size").at(0).get<int>();
  r.width = j.at("size").at(1).get<int>();
  r.counts = j.at("counts").get<std::vector<std::uint64_t>>();
  return r;
}

ordered_json box_json(const BoundingBox& b) { return ordered_json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

BoundingBox box_from_json(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

}  // namespace

// ---------------------------------------------------------------------------

RleMask rle_encode(const BinaryMask& mask) {
  RleMask r{mask.height(), mask.width(), {}};
  bool current = false;
  std::uint64_t run = 0;
  for (int x = 0; x < mask.width(); ++x) {
    for (int y = 0; y < mask.height(); ++y) {
      if (mask.at(x, y) != current) {
        r.counts.push_back(run);
        run = 0;
        current = !current;
      }
      ++run;
    }
  }
  r.counts.push_back(run);
  return r;
}

BinaryMask rle_decode(const RleMask& rle) {
  if (rle.height < 0 || rle.width < 0) throw FormatError("RLE size must be non-negative");
  const std::uint64_t n = static_cast<std::uint64_t>(rle.height) * static_cast<std::uint64_t>(rle.width);
  std::uint64_t sum = 0;
  for (auto c : rle.counts) sum += c;
  if (sum != n) {
    throw FormatError("RLE runs sum to " + std::to_string(sum) + ", expected " + std::to_string(n));
  }
  BinaryMask m(rle.width, rle.height);
  std::uint64_t pos = 0;
  bool value = false;
  for (auto c : rle.counts) {
    if (value) {
      for (std::uint64_t k = pos; k < pos + c; ++k) {
        m.set(static_cast<int>(k / static_cast<std::uint64_t>(rle.height)),
              static_cast<int>(k % static_cast<std::uint64_t>(rle.height)), true);
      }
    }
    pos += c;
    value = !value;
  }
  return m;
}

std::uint64_t rle_area(const RleMask& rle) {
  std::uint64_t a = 0;
  for (std::size_t i = 1; i < rle.counts.size(); i += 2) a += rle.counts[i];
  return a;
}

// ---------------------------------------------------------------------------

PoolManifest read_pool_manifest(const fs::path& path) {
  const std::string origin = path.string();
  const json j = parse(read_text_file(path), origin);
  return guarded(origin, [&] {
    PoolManifest m;
    std::set<std::string> seen;
    for (const auto& e : j.at("entries")) {
      PoolEntry p;
      p.asset_id = e.at("asset_id").get<std::string>();
      p.rgba_path = e.at("rgba_path").get<std::string>();
      p.mask_path = e.at("mask_path").get<std::string>();
      p.source = asset_source_from_string(e.at("source").get<std::string>());
      p.native_width = e.at("native_size").at(0).get<int>();
      p.native_height = e.at("native_size").at(1).get<int>();
      p.origin = e.value("origin", std::string{});
      if (!seen.insert(p.asset_id).second) throw FormatError(origin + ": duplicate asset_id '" + p.asset_id + "'");
      m.entries.push_back(std::move(p));
    }
    return m;
  });
}

void write_pool_manifest(const fs::path& path, const PoolManifest& manifest) {
  ordered_json entries = ordered_json::array();
  for (const auto& e : manifest.entries) {
    ordered_json o{{"asset_id", e.asset_id},
                   {"rgba_path", e.rgba_path},
                   {"mask_path", e.mask_path},
                   {"source", to_string(e.source)},
                   {"native_size", {e.native_width, e.native_height}}};
    if (!e.origin.empty()) o["origin"] = e.origin;
    entries.push_back(std::move(o));
  }
  write_text_file(path, ordered_json{{"entries", entries}}.dump(2) + "\n");
}

std::vector<InstanceAsset> load_foreground_pool(const fs::path& manifest_path) {
  const PoolManifest m = read_pool_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  std::vector<InstanceAsset> out;
  for (const auto& e : m.entries) {
    const fs::path rgba_path = resolve(base, e.rgba_path), mask_path = resolve(base, e.mask_path);
    for (const auto& p : {rgba_path, mask_path}) {
      if (!fs::exists(p)) throw IoError("asset '" + e.asset_id + "': missing file " + p.string());
    }
    ImageBuffer img = read_png(rgba_path);
    BinaryMask mask = read_mask_png(mask_path);
    if (mask.width() != img.width() || mask.height() != img.height()) {
      throw FormatError("asset '" + e.asset_id + "': mask and image sizes differ");
    }
    ImageBuffer rgba(img.width(), img.height(), 4);
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        for (int c = 0; c < 3; ++c) rgba.at(x, y, c) = img.at(x, y, img.channels() >= 3 ? c : 0);
        rgba.at(x, y, 3) = mask.at(x, y) ? 1.0f : 0.0f;
      }
    }
    InstanceAsset a;
    a.rgba = std::move(rgba);
    a.mask = std::move(mask);
    a.provenance.asset_id = e.asset_id;
    a.provenance.source = e.source;
    a.provenance.native_width = e.native_width;
    a.provenance.native_height = e.native_height;
    a.provenance.origin = e.origin;
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Background> load_backgrounds(const fs::path& path) {
  std::vector<Background> out;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back({f.stem().string(), read_png(f)});
  } else {
    const std::string origin = path.string();
    const json j = parse(read_text_file(path), origin);
    const auto entries = guarded(origin, [&] {
      std::vector<std::pair<std::string, std::string>> v;
      for (const auto& e : j.at("backgrounds")) v.emplace_back(e.at("id").get<std::string>(), e.at("path").get<std::string>());
      return v;
    });
    for (const auto& [id, p] : entries) out.push_back({id, read_png(resolve(path.parent_path(), p))});
  }
  for (auto& b : out) {
    if (b.image.channels() == 4) {
      ImageBuffer rgb(b.image.width(), b.image.height(), 3);
      for (int y = 0; y < rgb.height(); ++y) {
        for (int x = 0; x < rgb.width(); ++x) {
          for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = b.image.at(x, y, c);
        }
      }
      b.image = std::move(rgb);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

GuideBundle parse_guide_boxes(const std::string& text) {
  const std::string origin = "guide box bundle";
  const json j = parse(text, origin);
  return guarded(origin, [&] {
    GuideBundle b;
    for (const auto& p : j.at("photos")) {
      GuidePhoto g;
      g.id = p.at("id").is_string() ? p.at("id").get<std::string>() : std::to_string(p.at("id").get<std::int64_t>());
      g.width = p.at("width").get<int>();
      g.height = p.at("height").get<int>();
      if (g.width < 1 || g.height < 1) throw FormatError(origin + ": photo " + g.id + " has no extent");
      for (const auto& bx : p.at("boxes")) {
        const BoundingBox box = BoundingBox::from_xywh(bx.at(0).get<double>(), bx.at(1).get<double>(),
                                                       bx.at(2).get<double>(), bx.at(3).get<double>());
        if (!box.valid()) throw FormatError(origin + ": photo " + g.id + " holds a degenerate box");
        g.boxes.push_back(box);
      }
      b.photos.push_back(std::move(g));
    }
    return b;
  });
}

GuideBundle load_guide_boxes(const fs::path& path) {
  try {
    return parse_guide_boxes(read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<BoundingBox> scale_guide_boxes(const GuidePhoto& photo, int canvas) {
  const double s = static_cast<double>(canvas) / std::max(photo.width, photo.height);
  const double ox = (canvas - photo.width * s) / 2.0, oy = (canvas - photo.height * s) / 2.0;
  std::vector<BoundingBox> out;
  for (const auto& b : photo.boxes) out.push_back({b.x_min * s + ox, b.y_min * s + oy, b.x_max * s + ox, b.y_max * s + oy});
  return out;
}

std::vector<std::size_t> eligible_photos(const GuideBundle& bundle, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bundle.photos.size(); ++i) {
    if (bundle.photos[i].boxes.size() >= n) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string coco_to_json(const CocoDocument& doc) {
  ordered_json images = ordered_json::array();
  for (const auto& im : doc.images) {
    images.push_back({{"id", im.id}, {"file_name", im.file_name}, {"width", im.width}, {"height", im.height}});
  }
  ordered_json anns = ordered_json::array();
  for (const auto& a : doc.annotations) {
    ordered_json o{{"id", a.id},
                   {"image_id", a.image_id},
                   {"category_id", a.category_id},
                   {"bbox", a.bbox},
                   {"segmentation", rle_json(a.segmentation)},
                   {"area", a.area},
                   {"iscrowd", 0}};
    if (a.amodal || a.asset_id) {
      ordered_json extra = ordered_json::object();
      if (a.amodal) extra["amodal"] = rle_json(*a.amodal);
      if (a.asset_id) extra["asset_id"] = *a.asset_id;
      o["extra"] = extra;
    }
    if (a.score) o["score"] = *a.score;
    anns.push_back(std::move(o));
  }
  ordered_json j{{"images", images},
                 {"annotations", anns},
                 {"categories", ordered_json::array({{{"id", 1}, {"name", "subject"}}})}};
  return j.dump();
}

namespace {

CocoAnnotation annotation_from_json(const json& a, const std::string& origin, std::int64_t fallback_id) {
  CocoAnnotation r;
  r.id = a.value("id", fallback_id);
  r.image_id = a.at("image_id").get<std::int64_t>();
  r.category_id = a.value("category_id", 1);
  r.bbox = a.at("bbox").get<std::array<double, 4>>();
  r.segmentation = rle_from_json(a.at("segmentation"), origin);
  r.area = a.contains("area") ? a.at("area").get<std::uint64_t>() : rle_area(r.segmentation);
  if (a.contains("extra")) {
    const auto& e = a.at("extra");
    if (e.contains("amodal")) r.amodal = rle_from_json(e.at("amodal"), origin);
    if (e.contains("asset_id")) r.asset_id = e.at("asset_id").get<std::string>();
  }
  if (a.contains("score")) r.score = a.at("score").get<double>();
  return r;
}

}  // namespace

CocoDocument coco_from_json(const std::string& text, const std::string& origin) {
  const json j = parse(text, origin);
  return guarded(origin, [&] {
    CocoDocument d;
    const json& anns = j.is_array() ? j : j.at("annotations");
    if (j.is_object() && j.contains("images")) {
      for (const auto& im : j.at("images")) {
        d.images.push_back({im.at("id").get<std::int64_t>(), im.value("file_name", std::string{}),
                            im.at("width").get<int>(), im.at("height").get<int>()});
      }
    }
    std::int64_t next = 1;
    for (const auto& a : anns) d.annotations.push_back(annotation_from_json(a, origin, next++));
    return d;
  });
}

CocoDocument read_coco(const fs::path& path) { return coco_from_json(read_text_file(path), path.string()); }

CocoDocument read_predictions(const fs::path& path) { return read_coco(path); }

std::vector<CocoAnnotation> annotate(const AnnotatedSample& sample, std::int64_t image_id,
                                     std::int64_t first_annotation_id) {
  std::vector<CocoAnnotation> out;
  for (const auto& inst : sample.instances) {
    CocoAnnotation a;
    a.id = first_annotation_id++;
    a.image_id = image_id;
    a.bbox = {inst.bbox.x_min, inst.bbox.y_min, inst.bbox.width(), inst.bbox.height()};
    a.segmentation = rle_encode(inst.modal_mask);
    a.area = rle_area(a.segmentation);
    a.amodal = rle_encode(inst.amodal_mask);
    a.asset_id = inst.asset_id;
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<GroundTruth> ground_truth_from_coco(const CocoDocument& gt) {
  std::vector<GroundTruth> out;
  for (const auto& a : gt.annotations) {
    out.push_back({a.image_id, BoundingBox::from_xywh(a.bbox[0], a.bbox[1], a.bbox[2], a.bbox[3]),
                   rle_decode(a.segmentation)});
  }
  return out;
}

std::vector<Detection> detections_from_coco(const CocoDocument& pred, const CocoDocument& gt) {
  std::map<std::int64_t, std::pair<int, int>> gt_images;
  for (const auto& im : gt.images) gt_images[im.id] = {im.width, im.height};

  std::vector<std::string> problems;
  if (!pred.images.empty()) {
    std::set<std::int64_t> pred_ids;
    for (const auto& im : pred.images) pred_ids.insert(im.id);
    for (const auto& [id, size] : gt_images) {
      if (!pred_ids.count(id)) problems.push_back("image " + std::to_string(id) + " missing from predictions");
    }
    for (auto id : pred_ids) {
      if (!gt_images.count(id)) problems.push_back("image " + std::to_string(id) + " missing from ground truth");
    }
  }
  std::set<std::int64_t> reported;
  for (const auto& a : pred.annotations) {
    if (!gt_images.count(a.image_id) && reported.insert(a.image_id).second) {
      problems.push_back("prediction references unknown image " + std::to_string(a.image_id));
    }
  }
  if (!problems.empty()) {
    std::string msg = "image id mismatch:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw FormatError(msg);
  }

  std::vector<Detection> out;
  for (const auto& a : pred.annotations) {
    const auto [w, h] = gt_images.at(a.image_id);
    BinaryMask m = rle_decode(a.segmentation);
    if (m.width() != w || m.height() != h) {
      throw FormatError("prediction " + std::to_string(a.id) + ": mask size differs from image " +
                        std::to_string(a.image_id));
    }
    out.push_back({a.image_id, a.score.value_or(1.0), BoundingBox::from_xywh(a.bbox[0], a.bbox[1], a.bbox[2], a.bbox[3]),
                   std::move(m)});
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string layout_to_json(const SceneLayout& l) {
  ordered_json placements = ordered_json::array();
  for (const auto& p : l.placements) {
    const auto& t = p.transform;
    placements.push_back({{"asset_id", p.asset_id},
                          {"z", p.z},
                          {"target_box", box_json(p.target_box)},
                          {"guide_box", p.guide_box ? box_json(*p.guide_box) : ordered_json(nullptr)},
                          {"transform",
                           {{"flip", t.flip},
                            {"warp", to_string(t.warp)},
                            {"rotation_deg", t.rotation_deg},
                            {"grid", {{"cells", t.grid.cells}, {"x_scales", t.grid.x_scales}, {"y_scales", t.grid.y_scales}}},
                            {"long_side", t.long_side}}}});
  }
  const auto& h = l.harmonization;
  ordered_json j{{"canvas", l.canvas},
                 {"master_seed", l.master_seed},
                 {"sample_index", l.sample_index},
                 {"background_id", l.background_id},
                 {"background_crop",
                  {{"resized_width", l.background_crop.resized_width},
                   {"resized_height", l.background_crop.resized_height},
                   {"x", l.background_crop.x},
                   {"y", l.background_crop.y}}},
                 {"strategy", to_string(l.strategy)},
                 {"attempts", l.attempts},
                 {"strategy_fallback", l.strategy_fallback},
                 {"guide_photo", l.guide_photo},
                 {"harmonization",
                  {{"mode", to_string(h.mode)}, {"k", h.k}, {"reference_instance", h.reference_instance}, {"seed", h.seed}}},
                 {"placements", placements}};
  return j.dump(2) + "\n";
}

SceneLayout layout_from_json(const std::string& text, const std::string& origin) {
  const json j = parse(text, origin);
  return guarded(origin, [&] {
    SceneLayout l;
    l.canvas = j.at("canvas").get<int>();
    l.master_seed = j.at("master_seed").get<std::uint64_t>();
    l.sample_index = j.at("sample_index").get<std::uint64_t>();
    l.background_id = j.at("background_id").get<std::string>();
    const auto& c = j.at("background_crop");
    l.background_crop = {c.at("resized_width").get<int>(), c.at("resized_height").get<int>(), c.at("x").get<int>(),
                         c.at("y").get<int>()};
    l.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    l.attempts = j.value("attempts", 1);
    l.strategy_fallback = j.value("strategy_fallback", false);
    l.guide_photo = j.value("guide_photo", std::int64_t{-1});
    const auto& h = j.at("harmonization");
    l.harmonization.mode = harmonize_mode_from_string(h.at("mode").get<std::string>());
    l.harmonization.k = h.value("k", 0);
    l.harmonization.reference_instance = h.value("reference_instance", -1);
    l.harmonization.seed = h.value("seed", std::uint64_t{0});
    for (const auto& p : j.at("placements")) {
      Placement q;
      q.asset_id = p.at("asset_id").get<std::string>();
      q.z = p.at("z").get<int>();
      q.target_box = box_from_json(p.at("target_box"));
      if (p.contains("guide_box") && !p.at("guide_box").is_null()) q.guide_box = box_from_json(p.at("guide_box"));
      const auto& t = p.at("transform");
      q.transform.flip = t.at("flip").get<bool>();
      q.transform.warp = warp_kind_from_string(t.at("warp").get<std::string>());
      q.transform.rotation_deg = t.at("rotation_deg").get<double>();
      q.transform.grid.cells = t.at("grid").at("cells").get<int>();
      q.transform.grid.x_scales = t.at("grid").at("x_scales").get<std::vector<double>>();
      q.transform.grid.y_scales = t.at("grid").at("y_scales").get<std::vector<double>>();
      q.transform.long_side = t.at("long_side").get<int>();
      l.placements.push_back(std::move(q));
    }
    return l;
  });
}

SceneLayout read_layout(const fs::path& path) { return layout_from_json(read_text_file(path), path.string()); }

std::string image_file_name(std::uint64_t sample_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "images/%06llu.png", static_cast<unsigned long long>(sample_index));
  return buf;
}

std::string layout_file_name(std::uint64_t sample_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "layouts/%06llu.json", static_cast<unsigned long long>(sample_index));
  return buf;
}

DatasetWriter::DatasetWriter(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_ / "images", ec);
  if (!ec) fs::create_directories(dir_ / "layouts", ec);
  if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
}

void DatasetWriter::add(const AnnotatedSample& sample, const SceneLayout& layout) {
  const std::uint64_t idx = layout.sample_index;
  const auto image_id = static_cast<std::int64_t>(idx) + 1;
  write_png(dir_ / image_file_name(idx), sample.image);
  write_text_file(dir_ / layout_file_name(idx), layout_to_json(layout));
  pending_.push_back({idx, {image_id, image_file_name(idx), sample.image.width(), sample.image.height()},
                      annotate(sample, image_id, 0)});
}

CocoDocument DatasetWriter::finish() {
  std::sort(pending_.begin(), pending_.end(), [](const Pending& a, const Pending& b) { return a.index < b.index; });
  CocoDocument doc;
  std::int64_t next = 1;
  for (auto& p : pending_) {
    doc.images.push_back(p.image);
    for (auto& a : p.annotations) {
      a.id = next++;
      doc.annotations.push_back(std::move(a));
    }
  }
  pending_.clear();
  write_text_file(dir_ / "annotations.json", coco_to_json(doc));
  return doc;
}

CocoDocument write_dataset(const std::vector<std::pair<AnnotatedSample, SceneLayout>>& samples, const fs::path& dir) {
  DatasetWriter w(dir);
  for (const auto& [s, l] : samples) w.add(s, l);
  return w.finish();
}

std::vector<StoredSample> read_dataset(const fs::path& dir) {
  const CocoDocument doc = read_coco(dir / "annotations.json");
  std::map<std::int64_t, std::size_t> slot;
  std::vector<StoredSample> out;
  for (const auto& im : doc.images) {
    StoredSample s;
    s.sample.image = read_png(dir / im.file_name);
    const fs::path layout = dir / layout_file_name(static_cast<std::uint64_t>(im.id - 1));
    if (fs::exists(layout)) s.layout = read_layout(layout);
    slot[im.id] = out.size();
    out.push_back(std::move(s));
  }
  for (const auto& a : doc.annotations) {
    const auto it = slot.find(a.image_id);
    if (it == slot.end()) throw FormatError("annotation " + std::to_string(a.id) + " references unknown image");
    AnnotatedInstance inst;
    inst.modal_mask = rle_decode(a.segmentation);
    inst.amodal_mask = a.amodal ? rle_decode(*a.amodal) : inst.modal_mask;
    inst.bbox = BoundingBox::from_xywh(a.bbox[0], a.bbox[1], a.bbox[2], a.bbox[3]);
    inst.asset_id = a.asset_id.value_or("");
    out[it->second].sample.instances.push_back(std::move(inst));
  }
  return out;
}

}  // namespace toonsynth
