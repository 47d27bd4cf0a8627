#pragma once

#include <string>

#include "painter/canvas.hpp"

namespace painter {

/// 8-bit RGB PNG, no alpha, unfiltered scanlines.
std::string encode_png(const Canvas& c);

}  // namespace painter
