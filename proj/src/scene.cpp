#include <algorithm>
#include <cmath>

#include "painter/dataset.hpp"
#include "painter/error.hpp"

namespace painter {

ObjectPool::ObjectPool(std::vector<std::string> classes, std::vector<ObjectSource> loaded)
    : classes_(std::move(classes)) {
  for (auto& obj : loaded) {
    if (std::find(classes_.begin(), classes_.end(), obj.class_name) == classes_.end()) continue;
    loaded_[obj.class_name].push_back(std::move(obj));
  }
}

bool ObjectPool::has(std::string_view class_name) const {
  if (std::find(classes_.begin(), classes_.end(), class_name) == classes_.end()) return false;
  if (loaded_.find(class_name) != loaded_.end()) return true;
  const auto& proc = procedural_classes();
  return std::find(proc.begin(), proc.end(), class_name) != proc.end();
}

ObjectSource ObjectPool::draw(std::string_view class_name, Rng& rng) const {
  if (!has(class_name)) throw MissingClass("no source drawings for class '" + std::string(class_name) + "'");
  if (auto it = loaded_.find(class_name); it != loaded_.end()) return rng.pick(it->second);
  return procedural_object(class_name, rng);
}

namespace {

std::vector<Stroke> place_strokes(const ObjectSource& src, const BBox& box, double epsilon) {
  auto scaled = scale_strokes_to_bbox(src.strokes, box);
  for (auto& s : scaled) {
    auto last = std::unique(s.points.begin(), s.points.end());
    s.points.erase(last, s.points.end());
    s = rdp_simplify(s, epsilon);
  }
  return scaled;
}

SceneObject make_object(const ObjectSource& src, const BBox& box, double epsilon) {
  return {src.class_name, src.article, box, place_strokes(src, box, epsilon)};
}

// Scales one source-frame box to the canvas and jitters each coordinate.
BBox normalize_box(const BBox& b, int sw, int sh, double jitter, Rng& rng) {
  const double kx = static_cast<double>(kCanvasSize) / sw;
  const double ky = static_cast<double>(kCanvasSize) / sh;
  auto perturb = [&](double v) { return jitter > 0 ? v + rng.uniform(-jitter, jitter) : v; };
  double x = perturb(b.x * kx);
  double y = perturb(b.y * ky);
  double w = perturb(b.w * kx);
  double h = perturb(b.h * ky);
  BBox out;
  out.x = std::clamp(static_cast<int>(std::lround(x)), 0, kCanvasSize - 1);
  out.y = std::clamp(static_cast<int>(std::lround(y)), 0, kCanvasSize - 1);
  out.w = std::clamp(static_cast<int>(std::lround(w)), 1, kCanvasSize - out.x);
  out.h = std::clamp(static_cast<int>(std::lround(h)), 1, kCanvasSize - out.y);
  return out;
}

}  // namespace

Scene compose_relationship_scene(const RelationshipRecord& rec, const ObjectPool& pool, Rng& rng,
                                 const SceneOptions& opts) {
  if (!pool.has(rec.subject_class)) throw MissingClass("pool lacks '" + rec.subject_class + "'");
  if (!pool.has(rec.object_class)) throw MissingClass("pool lacks '" + rec.object_class + "'");
  const double jitter = opts.perturbation * kCanvasSize;
  const BBox sbox = normalize_box(rec.subject_box, rec.source_w, rec.source_h, jitter, rng);
  const BBox obox = normalize_box(rec.object_box, rec.source_w, rec.source_h, jitter, rng);
  const auto subject = pool.draw(rec.subject_class, rng);
  const auto object = pool.draw(rec.object_class, rng);
  Scene scene;
  scene.objects.push_back(make_object(subject, sbox, opts.rdp_epsilon));
  scene.objects.push_back(make_object(object, obox, opts.rdp_epsilon));
  scene.relationship = Relationship{0, rec.predicate, 1};
  return scene;
}

Scene compose_location_scene(const ObjectPool& pool, int n, Rng& rng, const SceneOptions& opts) {
  n = std::clamp(n, 1, 4);
  constexpr int kAttempts = 50;
  constexpr double kMaxIou = 0.1;
  Scene scene;
  std::vector<BBox> placed;
  for (int k = 0; k < n; ++k) {
    const auto& cls = rng.pick(pool.classes());
    BBox best;
    double best_iou = 2.0;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      BBox b;
      b.w = rng.uniform_int(64, 128);
      b.h = rng.uniform_int(64, 128);
      b.x = rng.uniform_int(0, kCanvasSize - b.w);
      b.y = rng.uniform_int(0, kCanvasSize - b.h);
      double worst = 0;
      for (const auto& p : placed) worst = std::max(worst, iou(b, p));
      if (worst < best_iou) {
        best_iou = worst;
        best = b;
      }
      if (worst < kMaxIou) break;
    }
    placed.push_back(best);
    scene.objects.push_back(make_object(pool.draw(cls, rng), best, opts.rdp_epsilon));
  }
  return scene;
}

const std::vector<std::string>& location_tags() {
  static const std::vector<std::string> tags = {
      "at the top left corner of",    "at the top of",    "at the top right corner of",
      "at the left side of",          "at the center of", "at the right side of",
      "at the bottom left corner of", "at the bottom of", "at the bottom right corner of",
  };
  return tags;
}

std::string location_tag(const BBox& b) {
  // Center on the doubled grid avoids rounding: 2*cx = 2x + w - 1.
  const int cx2 = 2 * b.x + b.w - 1;
  const int cy2 = 2 * b.y + b.h - 1;
  auto cell = [](int c2) { return c2 < 2 * 85 ? 0 : (c2 < 2 * 171 ? 1 : 2); };
  return location_tags()[static_cast<std::size_t>(cell(cy2) * 3 + cell(cx2))];
}

}  // namespace painter
