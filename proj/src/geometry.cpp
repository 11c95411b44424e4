#include "simplerf/geometry.hpp"

namespace simplerf {

Mat4 Mat4::identity() {
  Mat4 r;
  r.at(0, 0) = r.at(1, 1) = r.at(2, 2) = r.at(3, 3) = 1.0;
  return r;
}

Mat4 Mat4::mul(const Mat4& o) const {
  Mat4 r;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += at(i, k) * o.at(k, j);
      r.at(i, j) = acc;
    }
  return r;
}

Vec3 Mat4::transform_point(const Vec3& p) const {
  return {at(0, 0) * p.x + at(0, 1) * p.y + at(0, 2) * p.z + at(0, 3),
          at(1, 0) * p.x + at(1, 1) * p.y + at(1, 2) * p.z + at(1, 3),
          at(2, 0) * p.x + at(2, 1) * p.y + at(2, 2) * p.z + at(2, 3)};
}

Vec3 Mat4::transform_dir(const Vec3& d) const {
  return {at(0, 0) * d.x + at(0, 1) * d.y + at(0, 2) * d.z,
          at(1, 0) * d.x + at(1, 1) * d.y + at(1, 2) * d.z,
          at(2, 0) * d.x + at(2, 1) * d.y + at(2, 2) * d.z};
}

Mat4 Mat4::rigid_inverse() const {
  Mat4 r = identity();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.at(i, j) = at(j, i);
  const Vec3 t = translation();
  const Vec3 ti = r.transform_dir(t);
  r.at(0, 3) = -ti.x;
  r.at(1, 3) = -ti.y;
  r.at(2, 3) = -ti.z;
  return r;
}

bool Mat4::rotation_orthonormal(double tol) const {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += at(k, i) * at(k, j);
      const double want = i == j ? 1.0 : 0.0;
      if (std::fabs(acc - want) > tol) return false;
    }
  return true;
}

Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& down) {
  const Vec3 z = (target - eye).normalized();
  const Vec3 x = down.cross(z).normalized();
  const Vec3 y = z.cross(x);
  Mat4 r = Mat4::identity();
  r.at(0, 0) = x.x; r.at(1, 0) = x.y; r.at(2, 0) = x.z;
  r.at(0, 1) = y.x; r.at(1, 1) = y.y; r.at(2, 1) = y.z;
  r.at(0, 2) = z.x; r.at(1, 2) = z.y; r.at(2, 2) = z.z;
  r.at(0, 3) = eye.x; r.at(1, 3) = eye.y; r.at(2, 3) = eye.z;
  return r;
}

}  // namespace simplerf
