#pragma once

// Random value generators shared by the property-style tests.

#include <string>
#include <vector>

#include "painter/codec.hpp"
#include "painter/rng.hpp"

namespace painter::testing {

inline Stroke random_stroke(Rng& rng, int max_points = 12) {
  Stroke s;
  if (rng.coin()) {
    s = Stroke{kBlack, 1, {}};
  } else if (rng.coin()) {
    s = Stroke{kWhite, 2, {}};
  } else {
    s = Stroke{{rng.uniform_int(0, 255), rng.uniform_int(0, 255), rng.uniform_int(0, 255)},
               rng.uniform_int(1, 2), {}};
  }
  const int n = rng.uniform_int(1, max_points);
  for (int i = 0; i < n; ++i) s.points.push_back({rng.uniform_int(0, 255), rng.uniform_int(0, 255)});
  return s;
}

inline std::string random_words(Rng& rng, int max_words = 6) {
  static const std::vector<std::string> pool = {"draw", "a",    "tree", "at",  "the", "top",   "of",
                                                "this", "sketch", "2", "circles", "and", "what", "is"};
  std::string out;
  const int n = rng.uniform_int(1, max_words);
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += rng.pick(pool);
  }
  return out;
}

/// A canonical transcript: no empty or adjacent text segments.
inline Transcript random_transcript(Rng& rng) {
  Transcript t;
  t.response_closed = rng.coin(0.7);
  auto fill = [&](std::vector<PromptSegment>& segs, bool strokes) {
    const int n = rng.uniform_int(0, 5);
    bool last_text = false;
    for (int i = 0; i < n; ++i) {
      if (!last_text && rng.coin(0.6)) {
        std::string text = strokes && rng.coin() ? serialize_stroke(random_stroke(rng, 4))
                                                 : random_words(rng);
        segs.push_back(TextSegment{text});
        last_text = true;
      } else {
        segs.push_back(ImagePlaceholder{static_cast<int>(t.images.size())});
        t.images.push_back(nullptr);
        last_text = false;
      }
    }
  };
  fill(t.command, false);
  fill(t.response, true);
  return t;
}

}  // namespace painter::testing
