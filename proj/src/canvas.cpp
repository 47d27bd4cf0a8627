#include "painter/canvas.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>

#include "painter/error.hpp"

namespace painter {

namespace {

void stamp(Canvas& c, int x, int y, int width, Color color) {
  for (int dy = 0; dy < width; ++dy) {
    for (int dx = 0; dx < width; ++dx) {
      const int px = x + dx;
      const int py = y + dy;
      if (px >= 0 && py >= 0 && px < Canvas::kSize && py < Canvas::kSize) c.set(px, py, color);
    }
  }
}

void bresenham(Canvas& c, Point a, Point b, int width, Color color) {
  int x = a.x;
  int y = a.y;
  const int dx = std::abs(b.x - a.x);
  const int dy = -std::abs(b.y - a.y);
  const int sx = a.x < b.x ? 1 : -1;
  const int sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    stamp(c, x, y, width, color);
    if (x == b.x && y == b.y) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
}

}  // namespace

void draw_stroke_into(Canvas& c, const Stroke& s) {
  if (s.points.empty()) return;
  if (s.points.size() == 1) {
    stamp(c, s.points[0].x, s.points[0].y, s.width, s.color);
    return;
  }
  for (std::size_t i = 1; i < s.points.size(); ++i)
    bresenham(c, s.points[i - 1], s.points[i], s.width, s.color);
}

Canvas apply_stroke(Canvas c, const Stroke& s) {
  draw_stroke_into(c, s);
  return c;
}

Canvas apply_strokes(Canvas c, std::span<const Stroke> strokes) {
  for (const auto& s : strokes) draw_stroke_into(c, s);
  return c;
}

double mse(const Canvas& a, const Canvas& b) {
  const auto pa = a.bytes();
  const auto pb = b.bytes();
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const int d = static_cast<int>(pa[i]) - static_cast<int>(pb[i]);
    sum += static_cast<std::uint64_t>(d * d);
  }
  return static_cast<double>(sum) / static_cast<double>(pa.size());
}

double psnr(const Canvas& a, const Canvas& b) {
  const double m = mse(a, b);
  if (m == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / m));
}

BBox bounding_box(std::span<const Stroke> strokes) {
  int x0 = std::numeric_limits<int>::max();
  int y0 = std::numeric_limits<int>::max();
  int x1 = std::numeric_limits<int>::min();
  int y1 = std::numeric_limits<int>::min();
  bool any = false;
  for (const auto& s : strokes) {
    for (const auto& p : s.points) {
      any = true;
      x0 = std::min(x0, p.x);
      y0 = std::min(y0, p.y);
      x1 = std::max(x1, p.x);
      y1 = std::max(y1, p.y);
    }
  }
  if (!any) throw EmptyStrokes("bounding_box: no points");
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

std::vector<Stroke> scale_strokes_to_bbox(std::span<const Stroke> strokes, const BBox& target) {
  const BBox src = bounding_box(strokes);
  // Extent w maps [src.x, src.x + w - 1] onto [target.x, target.x + target.w - 1].
  auto map_axis = [](int v, int src0, int src_extent, int dst0, int dst_extent) {
    if (src_extent <= 1) return dst0;
    const double t = static_cast<double>(v - src0) / static_cast<double>(src_extent - 1);
    const double mapped = dst0 + t * static_cast<double>(dst_extent - 1);
    const int r = static_cast<int>(std::lround(mapped));
    return std::clamp(r, 0, Canvas::kSize - 1);
  };
  std::vector<Stroke> out;
  out.reserve(strokes.size());
  for (const auto& s : strokes) {
    Stroke t{s.color, s.width, {}};
    t.points.reserve(s.points.size());
    for (const auto& p : s.points)
      t.points.push_back({map_axis(p.x, src.x, src.w, target.x, target.w),
                          map_axis(p.y, src.y, src.h, target.y, target.h)});
    out.push_back(std::move(t));
  }
  return out;
}

double iou(const BBox& a, const BBox& b) {
  const int ix0 = std::max(a.x, b.x);
  const int iy0 = std::max(a.y, b.y);
  const int ix1 = std::min(a.x + a.w, b.x + b.w);
  const int iy1 = std::min(a.y + a.h, b.y + b.h);
  const double inter = static_cast<double>(std::max(0, ix1 - ix0)) * std::max(0, iy1 - iy0);
  const double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::string encode_ppm(const Canvas& c) {
  std::string out = "P6\n256 256\n255\n";
  const auto px = c.bytes();
  out.append(reinterpret_cast<const char*>(px.data()), px.size());
  return out;
}

Canvas decode_ppm(std::string_view bytes) {
  // Header: magic, width, height, maxval separated by whitespace; '#' comments allowed.
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_token = [&] {
    skip_ws();
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (read_token() != "P6") throw MalformedPPM("ppm: expected magic P6");
  const auto w = read_token();
  const auto h = read_token();
  const auto maxval = read_token();
  if (w != "256" || h != "256") throw MalformedPPM("ppm: expected 256x256 dimensions");
  if (maxval != "255") throw MalformedPPM("ppm: expected maxval 255");
  if (pos >= bytes.size()) throw MalformedPPM("ppm: truncated header");
  ++pos;  // single whitespace byte before raster
  if (bytes.size() - pos != Canvas::kBytes) throw MalformedPPM("ppm: raster size mismatch");
  Canvas c;
  std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end(), c.bytes().begin());
  return c;
}

std::uint64_t canvas_hash(const Canvas& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : c.bytes()) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace painter
