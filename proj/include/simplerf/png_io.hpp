#pragma once

#include <string>

#include "simplerf/image.hpp"

namespace simplerf {

// Minimal PNG support: 8-bit RGB, no interlace. Covers exactly the files this
// project writes; the reader additionally understands all five scanline
// filters for robustness.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

}  // namespace simplerf
