#include "simplerf/image.hpp"

#include <algorithm>
#include <cmath>

namespace simplerf {

namespace {
inline double clampd(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }
}

Vec3 Image::bilinear(double row, double col) const {
  int r0 = static_cast<int>(std::floor(row));
  int c0 = static_cast<int>(std::floor(col));
  r0 = std::min(std::max(r0, 0), height - 2 >= 0 ? height - 2 : 0);
  c0 = std::min(std::max(c0, 0), width - 2 >= 0 ? width - 2 : 0);
  const double fr = row - r0;
  const double fc = col - c0;
  const int r1 = std::min(r0 + 1, height - 1);
  const int c1 = std::min(c0 + 1, width - 1);
  Vec3 out;
  for (int ch = 0; ch < 3; ++ch) {
    const double v = (1 - fr) * ((1 - fc) * at(r0, c0, ch) + fc * at(r0, c1, ch)) +
                     fr * ((1 - fc) * at(r1, c0, ch) + fc * at(r1, c1, ch));
    if (ch == 0) out.x = v;
    if (ch == 1) out.y = v;
    if (ch == 2) out.z = v;
  }
  return out;
}

Vec3 Image::bilinear_clamped(double row, double col) const {
  return bilinear(clampd(row, 0.0, height - 1.0), clampd(col, 0.0, width - 1.0));
}

Image Image::quantized() const {
  Image q(width, height);
  for (size_t i = 0; i < data.size(); ++i) q.data[i] = quantize8(data[i]) / 255.0;
  return q;
}

double DepthMap::bilinear_clamped(double row, double col) const {
  const double rr = clampd(row, 0.0, height - 1.0);
  const double cc = clampd(col, 0.0, width - 1.0);
  int r0 = std::min(static_cast<int>(std::floor(rr)), height - 2 >= 0 ? height - 2 : 0);
  int c0 = std::min(static_cast<int>(std::floor(cc)), width - 2 >= 0 ? width - 2 : 0);
  r0 = std::max(r0, 0);
  c0 = std::max(c0, 0);
  const double fr = rr - r0;
  const double fc = cc - c0;
  const int r1 = std::min(r0 + 1, height - 1);
  const int c1 = std::min(c0 + 1, width - 1);
  return (1 - fr) * ((1 - fc) * at(r0, c0) + fc * at(r0, c1)) +
         fr * ((1 - fc) * at(r1, c0) + fc * at(r1, c1));
}

std::vector<double> to_grayscale(const Image& img) {
  std::vector<double> g(static_cast<size_t>(img.width) * img.height);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      g[static_cast<size_t>(r) * img.width + c] = (img.at(r, c, 0) + img.at(r, c, 1) + img.at(r, c, 2)) / 3.0;
  return g;
}

std::vector<double> gradient_magnitude(const Image& img) {
  const std::vector<double> g = to_grayscale(img);
  const int w = img.width, h = img.height;
  std::vector<double> mag(g.size(), 0.0);
  auto px = [&](int r, int c) { return g[static_cast<size_t>(r) * w + c]; };
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const int cm = std::max(c - 1, 0), cp = std::min(c + 1, w - 1);
      const int rm = std::max(r - 1, 0), rp = std::min(r + 1, h - 1);
      const double gx = (px(r, cp) - px(r, cm)) / static_cast<double>(cp - cm == 0 ? 1 : cp - cm);
      const double gy = (px(rp, c) - px(rm, c)) / static_cast<double>(rp - rm == 0 ? 1 : rp - rm);
      mag[static_cast<size_t>(r) * w + c] = std::sqrt(gx * gx + gy * gy);
    }
  return mag;
}

}  // namespace simplerf
