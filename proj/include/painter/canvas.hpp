#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "painter/stroke.hpp"

namespace painter {

/// Fixed 256x256 RGB raster, row-major, white when fresh.
class Canvas {
 public:
  static constexpr int kSize = kCanvasSize;
  static constexpr std::size_t kBytes = static_cast<std::size_t>(kSize) * kSize * 3;

  Canvas() : pixels_(kBytes, 255) {}

  std::span<const std::uint8_t> bytes() const { return pixels_; }
  std::span<std::uint8_t> bytes() { return pixels_; }

  Color at(int x, int y) const {
    const auto i = index(x, y);
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }

  void set(int x, int y, Color c) {
    const auto i = index(x, y);
    pixels_[i] = static_cast<std::uint8_t>(c.r);
    pixels_[i + 1] = static_cast<std::uint8_t>(c.g);
    pixels_[i + 2] = static_cast<std::uint8_t>(c.b);
  }

  friend bool operator==(const Canvas&, const Canvas&) = default;

 private:
  static std::size_t index(int x, int y) {
    return (static_cast<std::size_t>(y) * kSize + static_cast<std::size_t>(x)) * 3;
  }

  std::vector<std::uint8_t> pixels_;
};

struct BBox {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline Canvas blank_canvas() { return Canvas{}; }

/// In-place rasterization. Single writer: the caller owns `c` exclusively.
void draw_stroke_into(Canvas& c, const Stroke& s);

/// Pure rasterization: integer Bresenham per segment, each line pixel
/// stamped with a width x width block anchored at its top-left, clipped.
Canvas apply_stroke(Canvas c, const Stroke& s);

Canvas apply_strokes(Canvas c, std::span<const Stroke> strokes);

double mse(const Canvas& a, const Canvas& b);

/// PSNR in dB; identical canvases score kPsnrCap.
inline constexpr double kPsnrCap = 99.0;
double psnr(const Canvas& a, const Canvas& b);

/// Tight box over every point of every stroke. Throws EmptyStrokes.
BBox bounding_box(std::span<const Stroke> strokes);

/// Affine map of the strokes' tight box onto `target`, rounded and clamped.
std::vector<Stroke> scale_strokes_to_bbox(std::span<const Stroke> strokes, const BBox& target);

double iou(const BBox& a, const BBox& b);

std::string encode_ppm(const Canvas& c);
Canvas decode_ppm(std::string_view bytes);

/// 64-bit FNV-1a over the raw RGB bytes.
std::uint64_t canvas_hash(const Canvas& c);
std::string hash_hex(std::uint64_t h);

}  // namespace painter
