#pragma once

#include <cstdint>
#include <vector>

namespace painter {

inline constexpr int kCanvasSize = 256;

struct Color {
  int r = 0;
  int g = 0;
  int b = 0;

  friend bool operator==(const Color&, const Color&) = default;
};

inline constexpr Color kBlack{0, 0, 0};
inline constexpr Color kWhite{255, 255, 255};

struct Point {
  int x = 0;
  int y = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// A colored, width-attributed polyline; the unit the model generates.
struct Stroke {
  Color color;
  int width = 1;
  std::vector<Point> points;

  friend bool operator==(const Stroke&, const Stroke&) = default;
};

/// Draw actions use black ink at width 1.
inline Stroke draw_stroke(std::vector<Point> points) {
  return Stroke{kBlack, 1, std::move(points)};
}

/// Remove actions redraw the same points in white at width 2.
inline Stroke erase_stroke(const Stroke& s) { return Stroke{kWhite, 2, s.points}; }

inline bool in_canvas(Point p) {
  return p.x >= 0 && p.y >= 0 && p.x < kCanvasSize && p.y < kCanvasSize;
}

inline bool is_valid(const Stroke& s) {
  auto channel_ok = [](int v) { return v >= 0 && v <= 255; };
  if (!channel_ok(s.color.r) || !channel_ok(s.color.g) || !channel_ok(s.color.b)) return false;
  if (s.width != 1 && s.width != 2) return false;
  if (s.points.empty()) return false;
  for (const auto& p : s.points)
    if (!in_canvas(p)) return false;
  return true;
}

}  // namespace painter
