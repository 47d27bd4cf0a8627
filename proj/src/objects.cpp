#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "painter/dataset.hpp"
#include "painter/error.hpp"

namespace painter {

std::string article_for(std::string_view class_name) {
  if (class_name.starts_with("the ") || class_name.starts_with("The ")) return "the";
  if (class_name.empty()) return "a";
  switch (std::tolower(static_cast<unsigned char>(class_name.front()))) {
    case 'a':
    case 'e':
    case 'i':
    case 'o':
    case 'u':
      return "an";
    default:
      return "a";
  }
}

namespace {

int clamp_coord(double v) {
  return std::clamp(static_cast<int>(std::lround(v)), 0, kCanvasSize - 1);
}

Point pt(double x, double y) { return {clamp_coord(x), clamp_coord(y)}; }

std::vector<Point> polygon(double cx, double cy, double rx, double ry, int n, double phase,
                           double jitter, Rng& rng) {
  std::vector<Point> pts;
  for (int i = 0; i < n; ++i) {
    const double a = phase + 2.0 * std::numbers::pi * i / n;
    const double k = 1.0 + rng.uniform(-jitter, jitter);
    pts.push_back(pt(cx + rx * k * std::cos(a), cy + ry * k * std::sin(a)));
  }
  pts.push_back(pts.front());
  return pts;
}

ObjectSource make(std::string_view name, std::vector<std::vector<Point>> strokes) {
  ObjectSource o{std::string(name), article_for(name), {}};
  for (auto& s : strokes) o.strokes.push_back(draw_stroke(std::move(s)));
  return o;
}

}  // namespace

std::vector<ObjectSource> parse_quickdraw(std::string_view ndjson) {
  std::vector<ObjectSource> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < ndjson.size()) {
    auto end = ndjson.find('\n', start);
    if (end == std::string_view::npos) end = ndjson.size();
    const auto line = ndjson.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    auto fail = [&](const std::string& what) {
      throw ParseError("quickdraw line " + std::to_string(line_no) + ": " + what);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(e.what());
    }
    if (!j.contains("word") || !j["word"].is_string()) fail("missing 'word'");
    if (!j.contains("drawing") || !j["drawing"].is_array()) fail("missing 'drawing'");
    const auto name = j["word"].get<std::string>();
    ObjectSource obj{name, article_for(name), {}};
    for (const auto& s : j["drawing"]) {
      if (!s.is_array() || s.size() < 2 || !s[0].is_array() || !s[1].is_array() ||
          s[0].size() != s[1].size())
        fail("stroke must be [xs, ys] of equal length");
      Stroke st = draw_stroke({});
      for (std::size_t k = 0; k < s[0].size(); ++k) {
        if (!s[0][k].is_number() || !s[1][k].is_number()) fail("non-numeric coordinate");
        st.points.push_back(pt(s[0][k].get<double>(), s[1][k].get<double>()));
      }
      if (!st.points.empty()) obj.strokes.push_back(std::move(st));
    }
    if (obj.strokes.empty()) fail("drawing has no strokes");
    out.push_back(std::move(obj));
  }
  return out;
}

std::vector<ObjectSource> ingest_quickdraw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_quickdraw(ss.str());
}

const std::vector<std::string>& procedural_classes() {
  static const std::vector<std::string> classes = {"circle", "square", "triangle", "star",
                                                   "house",  "tree",   "cup",      "ladder"};
  return classes;
}

ObjectSource procedural_object(std::string_view class_name, Rng& rng) {
  auto j = [&](double v, double spread) { return v + rng.uniform(-spread, spread); };
  if (class_name == "circle") {
    const double r = rng.uniform(60, 100);
    return make(class_name, {polygon(j(128, 10), j(128, 10), r, r * rng.uniform(0.9, 1.1), 12,
                                     rng.uniform(0, 0.5), 0.05, rng)});
  }
  if (class_name == "square") {
    const int x0 = rng.uniform_int(20, 60);
    const int y0 = rng.uniform_int(20, 60);
    const int side = rng.uniform_int(120, 190);
    const Point a{x0, y0}, b{x0 + side, y0}, c{x0 + side, y0 + side}, d{x0, y0 + side};
    return make(class_name, {{a, b, c, d, a}});
  }
  if (class_name == "triangle") {
    const Point apex = pt(j(128, 20), j(30, 15));
    const Point left = pt(j(40, 15), j(220, 15));
    const Point right = pt(j(216, 15), j(220, 15));
    return make(class_name, {{apex, right, left, apex}});
  }
  if (class_name == "star") {
    const double cx = j(128, 8), cy = j(128, 8);
    const double outer = rng.uniform(90, 110);
    const double inner = outer * rng.uniform(0.35, 0.45);
    const double phase = -std::numbers::pi / 2 + rng.uniform(-0.1, 0.1);
    std::vector<Point> pts;
    for (int i = 0; i < 10; ++i) {
      const double r = (i % 2 == 0) ? outer : inner;
      const double a = phase + std::numbers::pi * i / 5;
      pts.push_back(pt(cx + r * std::cos(a), cy + r * std::sin(a)));
    }
    pts.push_back(pts.front());
    return make(class_name, {pts});
  }
  if (class_name == "house") {
    const double x0 = j(50, 10), x1 = j(206, 10);
    const double wall_top = j(120, 10), floor = j(230, 8);
    const double peak_x = (x0 + x1) / 2 + rng.uniform(-10, 10), peak_y = j(30, 10);
    const double door_w = rng.uniform(24, 40), door_x = (x0 + x1) / 2 - door_w / 2 + rng.uniform(-20, 20);
    const double door_top = floor - rng.uniform(50, 70);
    return make(class_name,
                {{pt(x0, wall_top), pt(x0, floor), pt(x1, floor), pt(x1, wall_top), pt(x0, wall_top)},
                 {pt(x0 - 10, wall_top), pt(peak_x, peak_y), pt(x1 + 10, wall_top)},
                 {pt(door_x, floor), pt(door_x, door_top), pt(door_x + door_w, door_top),
                  pt(door_x + door_w, floor)}});
  }
  if (class_name == "tree") {
    const double cx = j(128, 8);
    const double trunk_w = rng.uniform(24, 40);
    const double trunk_top = j(150, 10);
    const double r = rng.uniform(60, 80);
    return make(class_name,
                {{pt(cx - trunk_w / 2, 240), pt(cx - trunk_w / 2, trunk_top),
                  pt(cx + trunk_w / 2, trunk_top), pt(cx + trunk_w / 2, 240)},
                 polygon(cx, trunk_top - r * 0.8, r * rng.uniform(0.9, 1.2), r, 9, rng.uniform(0, 0.6),
                         0.08, rng)});
  }
  if (class_name == "cup") {
    const double x0 = j(50, 10), x1 = j(170, 10), top = j(50, 10), bottom = j(220, 10);
    const double inset = rng.uniform(5, 20);
    return make(class_name, {{pt(x0, top), pt(x0 + inset, bottom), pt(x1 - inset, bottom), pt(x1, top)},
                             {pt(x1 - inset / 3, top + 40), pt(j(230, 8), top + 50),
                              pt(j(230, 8), bottom - 50), pt(x1 - inset, bottom - 40)}});
  }
  if (class_name == "ladder") {
    const double left = j(80, 10), right = j(176, 10), top = j(20, 8), bottom = j(236, 8);
    std::vector<std::vector<Point>> strokes = {{pt(left, top), pt(left, bottom)},
                                               {pt(right, top), pt(right, bottom)}};
    const int rungs = rng.uniform_int(3, 5);
    for (int i = 1; i <= rungs; ++i) {
      const double y = top + (bottom - top) * i / (rungs + 1) + rng.uniform(-4, 4);
      strokes.push_back({pt(left, y), pt(right, y)});
    }
    return make(class_name, std::move(strokes));
  }
  throw UnknownClass("no procedural generator for class '" + std::string(class_name) + "'");
}

ObjectSource procedural_object(std::string_view class_name, std::uint64_t seed) {
  Rng rng(seed);
  return procedural_object(class_name, rng);
}

double point_segment_distance(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double wx = p.x - a.x, wy = p.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? (wx * vx + wy * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = wx - t * vx, dy = wy - t * vy;
  return std::sqrt(dx * dx + dy * dy);
}

Stroke rdp_simplify(const Stroke& s, double epsilon) {
  const auto& pts = s.points;
  if (epsilon <= 0 || pts.size() < 3) return s;
  std::vector<bool> keep(pts.size(), false);
  keep.front() = keep.back() = true;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, pts.size() - 1}};
  while (!stack.empty()) {
    const auto [first, last] = stack.back();
    stack.pop_back();
    double max_dist = 0;
    std::size_t index = first;
    for (std::size_t i = first + 1; i < last; ++i) {
      const double d = point_segment_distance(pts[i], pts[first], pts[last]);
      if (d > max_dist) {
        max_dist = d;
        index = i;
      }
    }
    if (max_dist > epsilon) {
      keep[index] = true;
      stack.emplace_back(first, index);
      stack.emplace_back(index, last);
    }
  }
  Stroke out{s.color, s.width, {}};
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (keep[i]) out.points.push_back(pts[i]);
  return out;
}

std::vector<RelationshipRecord> parse_relationships_csv(std::string_view csv) {
  std::vector<RelationshipRecord> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < csv.size()) {
    auto end = csv.find('\n', start);
    if (end == std::string_view::npos) end = csv.size();
    std::string line(csv.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line_no == 1) continue;  // header
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 13)
      throw ParseError("relationships line " + std::to_string(line_no) + ": expected 13 columns");
    int v[10];
    try {
      for (int k = 0; k < 10; ++k) v[k] = std::stoi(cells[static_cast<std::size_t>(3 + k)]);
    } catch (const std::exception&) {
      throw ParseError("relationships line " + std::to_string(line_no) + ": non-integer field");
    }
    RelationshipRecord r{cells[0], cells[1], cells[2], {v[0], v[1], v[2], v[3]},
                         {v[4], v[5], v[6], v[7]}, v[8], v[9]};
    auto inside = [&](const BBox& b) {
      return b.x >= 0 && b.y >= 0 && b.w >= 1 && b.h >= 1 && b.x + b.w <= r.source_w &&
             b.y + b.h <= r.source_h;
    };
    if (r.source_w <= 0 || r.source_h <= 0 || !inside(r.subject_box) || !inside(r.object_box))
      throw ParseError("relationships line " + std::to_string(line_no) + ": box outside source frame");
    out.push_back(std::move(r));
  }
  return out;
}

extern const char* const kBundledRelationshipsCsv;

const std::vector<RelationshipRecord>& bundled_relationships() {
  static const auto records = parse_relationships_csv(kBundledRelationshipsCsv);
  return records;
}

}  // namespace painter
