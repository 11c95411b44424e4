#pragma once

#include <cstdint>
#include <vector>

#include "simplerf/geometry.hpp"

namespace simplerf {

// Float RGB image in [0,1], row-major, row 0 at the top. Continuous pixel
// coordinates put integer (row, col) at the pixel center.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // height * width * 3

  Image() = default;
  Image(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0.0) {}

  double& at(int r, int c, int ch) { return data[(static_cast<size_t>(r) * width + c) * 3 + ch]; }
  double at(int r, int c, int ch) const { return data[(static_cast<size_t>(r) * width + c) * 3 + ch]; }
  void set(int r, int c, const Vec3& rgb) {
    at(r, c, 0) = rgb.x;
    at(r, c, 1) = rgb.y;
    at(r, c, 2) = rgb.z;
  }
  Vec3 get(int r, int c) const { return {at(r, c, 0), at(r, c, 1), at(r, c, 2)}; }

  bool in_bounds_bilinear(double row, double col) const {
    return row >= 0.0 && row <= height - 1.0 && col >= 0.0 && col <= width - 1.0;
  }
  // Caller guarantees in_bounds_bilinear, or asks for clamped edges.
  Vec3 bilinear(double row, double col) const;
  Vec3 bilinear_clamped(double row, double col) const;

  // Round-trip through the 8-bit quantization used on disk.
  Image quantized() const;
};

struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> z;

  DepthMap() = default;
  DepthMap(int w, int h) : width(w), height(h), z(static_cast<size_t>(w) * h, 0.0) {}
  double& at(int r, int c) { return z[static_cast<size_t>(r) * width + c]; }
  double at(int r, int c) const { return z[static_cast<size_t>(r) * width + c]; }
  double bilinear_clamped(double row, double col) const;
};

// Mean over RGB of central-difference gradient magnitude; border uses
// one-sided differences.
std::vector<double> gradient_magnitude(const Image& img);

std::vector<double> to_grayscale(const Image& img);

inline uint8_t quantize8(double v) {
  const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<uint8_t>(c * 255.0 + 0.5);
}

}  // namespace simplerf
