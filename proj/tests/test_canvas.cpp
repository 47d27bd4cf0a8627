#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "generators.hpp"
#include "raster_oracle.hpp"
#include "painter/canvas.hpp"
#include "painter/error.hpp"

namespace painter {
namespace {

using testing::oracle_apply;
using testing::painted;

TEST(Canvas, BlankIsWhite) {
  const auto c = blank_canvas();
  for (auto b : c.bytes()) ASSERT_EQ(b, 255);
  EXPECT_EQ(psnr(c, blank_canvas()), kPsnrCap);
}

TEST(ApplyStroke, HorizontalSegment) {
  const auto c = apply_stroke(blank_canvas(), draw_stroke({{0, 0}, {3, 0}}));
  EXPECT_EQ(painted(c), (std::set<std::pair<int, int>>{{0, 0}, {1, 0}, {2, 0}, {3, 0}}));
}

TEST(ApplyStroke, SinglePoint) {
  EXPECT_EQ(painted(apply_stroke(blank_canvas(), draw_stroke({{5, 5}}))),
            (std::set<std::pair<int, int>>{{5, 5}}));
  EXPECT_EQ(painted(apply_stroke(blank_canvas(), Stroke{kBlack, 2, {{5, 5}}})),
            (std::set<std::pair<int, int>>{{5, 5}, {6, 5}, {5, 6}, {6, 6}}));
}

TEST(ApplyStroke, ClipsAtBorder) {
  const auto c = apply_stroke(blank_canvas(), Stroke{kBlack, 2, {{255, 255}}});
  EXPECT_EQ(painted(c), (std::set<std::pair<int, int>>{{255, 255}}));
}

TEST(ApplyStroke, MatchesOracle) {
  Rng rng(10);
  for (int i = 0; i < 200; ++i) {
    const auto s = testing::random_stroke(rng, 6);
    ASSERT_EQ(apply_stroke(blank_canvas(), s), oracle_apply(s)) << i;
  }
}

TEST(ApplyStroke, Deterministic) {
  Rng rng(11);
  const auto s = testing::random_stroke(rng);
  EXPECT_EQ(apply_stroke(blank_canvas(), s), apply_stroke(blank_canvas(), s));
}

TEST(ApplyStroke, WidthOneCoveredByWidthTwo) {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    auto s = testing::random_stroke(rng, 8);
    s.color = kBlack;
    s.width = 1;
    const auto thin = painted(apply_stroke(blank_canvas(), s));
    s.width = 2;
    const auto thick = painted(apply_stroke(blank_canvas(), s));
    for (const auto& p : thin) ASSERT_TRUE(thick.count(p));
    const auto drawn = apply_stroke(blank_canvas(), draw_stroke(s.points));
    ASSERT_EQ(apply_stroke(drawn, erase_stroke(s)), blank_canvas());
  }
}

TEST(Metrics, Fixtures) {
  const auto white = blank_canvas();
  Canvas black;
  for (auto& b : black.bytes()) b = 0;
  EXPECT_EQ(mse(white, white), 0.0);
  EXPECT_EQ(psnr(white, white), 99.0);
  EXPECT_EQ(mse(white, black), 65025.0);
  EXPECT_EQ(psnr(white, black), 0.0);
  Canvas one = white;
  one.bytes()[12345] = 0;
  EXPECT_DOUBLE_EQ(mse(white, one), 65025.0 / 196608.0);
  EXPECT_NEAR(psnr(white, one), 52.937, 1e-3);
  EXPECT_EQ(mse(white, one), mse(one, white));
}

TEST(Metrics, PsnrDecreasesWithMse) {
  Canvas a;
  double last = psnr(a, a);
  Canvas b = a;
  for (int k = 0; k < 50; ++k) {
    b.bytes()[static_cast<std::size_t>(k * 997)] = 0;
    const double p = psnr(a, b);
    EXPECT_LE(p, last);
    last = p;
  }
}

TEST(BoundingBox, Cases) {
  const std::vector<Stroke> one = {draw_stroke({{10, 20}, {30, 40}})};
  EXPECT_EQ(bounding_box(one), (BBox{10, 20, 21, 21}));
  const std::vector<Stroke> dot = {draw_stroke({{5, 5}})};
  EXPECT_EQ(bounding_box(dot), (BBox{5, 5, 1, 1}));
  EXPECT_THROW(bounding_box(std::vector<Stroke>{}), EmptyStrokes);
}

TEST(BoundingBox, UnionMatchesBruteForce) {
  Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    const std::vector<Stroke> ss = {testing::random_stroke(rng), testing::random_stroke(rng)};
    int x0 = 999, y0 = 999, x1 = -1, y1 = -1;
    for (const auto& s : ss)
      for (const auto& p : s.points) {
        x0 = std::min(x0, p.x);
        y0 = std::min(y0, p.y);
        x1 = std::max(x1, p.x);
        y1 = std::max(y1, p.y);
      }
    EXPECT_EQ(bounding_box(ss), (BBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1}));
  }
}

TEST(ScaleStrokes, AffineMap) {
  const std::vector<Stroke> src = {draw_stroke({{0, 0}, {50, 50}, {100, 100}})};
  const auto out = scale_strokes_to_bbox(src, BBox{10, 10, 51, 51});
  EXPECT_EQ(out[0].points, (std::vector<Point>{{10, 10}, {35, 35}, {60, 60}}));
  EXPECT_THROW(scale_strokes_to_bbox(std::vector<Stroke>{}, BBox{}), EmptyStrokes);
}

TEST(ScaleStrokes, DegenerateExtentMapsToStart) {
  const std::vector<Stroke> src = {draw_stroke({{7, 0}, {7, 100}})};
  const auto out = scale_strokes_to_bbox(src, BBox{40, 20, 30, 11});
  EXPECT_EQ(out[0].points, (std::vector<Point>{{40, 20}, {40, 30}}));
}

TEST(Ppm, RoundTripAndHeader) {
  Rng rng(14);
  Canvas c;
  for (auto& b : c.bytes()) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  EXPECT_EQ(decode_ppm(encode_ppm(c)), c);
  const auto blank = encode_ppm(blank_canvas());
  EXPECT_EQ(blank.substr(0, 15), "P6\n256 256\n255\n");
  EXPECT_EQ(blank.size(), 15u + 196608u);
  EXPECT_THROW(decode_ppm("P5\n256 256\n255\n" + std::string(196608, '\xff')), MalformedPPM);
  EXPECT_THROW(decode_ppm("P6\n128 256\n255\n" + std::string(98304, '\xff')), MalformedPPM);
  EXPECT_THROW(decode_ppm("P6\n256 256\n255\nshort"), MalformedPPM);
}

TEST(CanvasHash, Fnv1aReference) {
  // FNV-1a of 196608 bytes of 0xff, computed independently.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int i = 0; i < 196608; ++i) h = (h ^ 0xffu) * 0x100000001b3ULL;
  EXPECT_EQ(canvas_hash(blank_canvas()), h);
  EXPECT_EQ(hash_hex(0x1234), "0000000000001234");
}

}  // namespace
}  // namespace painter
