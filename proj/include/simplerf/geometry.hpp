#pragma once

#include <array>
#include <cmath>

namespace simplerf {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const { return *this / norm(); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Row-major 4x4, used only for rigid transforms (rotation + translation).
struct Mat4 {
  std::array<double, 16> m{};

  static Mat4 identity();
  double at(int r, int c) const { return m[static_cast<size_t>(r * 4 + c)]; }
  double& at(int r, int c) { return m[static_cast<size_t>(r * 4 + c)]; }
  Mat4 mul(const Mat4& o) const;
  Vec3 transform_point(const Vec3& p) const;
  Vec3 transform_dir(const Vec3& d) const;
  Vec3 col3(int c) const { return {at(0, c), at(1, c), at(2, c)}; }
  Vec3 translation() const { return col3(3); }
  // Inverse assuming the upper-left 3x3 is a rotation.
  Mat4 rigid_inverse() const;
  bool rotation_orthonormal(double tol = 1e-6) const;
};

// Camera frame: x right, y down, z forward (right-handed). `down` is the
// world-space direction that should map to image-down.
Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& down = {0.0, 1.0, 0.0});

struct Ray {
  Vec3 o;
  Vec3 d;

  Vec3 at(double t) const { return o + d * t; }
};

}  // namespace simplerf
