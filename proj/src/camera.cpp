#include "simplerf/camera.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace simplerf {

void Camera::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(fx) || !finite(fy) || !finite(cx) || !finite(cy))
    throw std::invalid_argument("camera: non-finite intrinsics");
  if (fx <= 0.0 || fy <= 0.0) throw std::invalid_argument("camera: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw std::invalid_argument("camera: non-positive image size");
  for (double v : pose.m)
    if (!finite(v)) throw std::invalid_argument("camera: non-finite pose");
  if (!pose.rotation_orthonormal()) throw std::invalid_argument("camera: pose rotation not orthonormal");
  if (!(near > 0.0) || !(far > near)) throw std::invalid_argument("camera: need 0 < near < far");
}

Ray ray_through(const Camera& cam, double row, double col) {
  const Vec3 dir_cam{(col - cam.cx) / cam.fx, (row - cam.cy) / cam.fy, 1.0};
  return Ray{cam.center(), cam.pose.transform_dir(dir_cam).normalized()};
}

RayBatch generate_rays(const Camera& cam, const std::vector<Pixel>& pixels) {
  RayBatch batch;
  batch.rays.reserve(pixels.size());
  batch.pixels = pixels;
  for (const Pixel& p : pixels) batch.rays.push_back(ray_through(cam, p.row, p.col));
  return batch;
}

Projection project(const Camera& cam, const Vec3& world_point) {
  const Vec3 pc = cam.pose.rigid_inverse().transform_point(world_point);
  Projection out;
  out.depth = pc.z;
  out.in_front = pc.z > 0.0;
  if (out.in_front) {
    out.u = cam.fx * pc.x / pc.z + cam.cx;
    out.v = cam.fy * pc.y / pc.z + cam.cy;
  }
  return out;
}

PatchSamples reproject_patch(const Camera& src, const Camera& dst, const Pixel& center,
                             double depth_along_ray, int k, const Image& dst_img) {
  PatchSamples out;
  out.k = k;
  out.rgb.assign(static_cast<size_t>(k) * k, Vec3{});
  const int h = k / 2;
  size_t i = 0;
  for (int dr = -h; dr <= h; ++dr)
    for (int dc = -h; dc <= h; ++dc, ++i) {
      const Ray ray = ray_through(src, center.row + dr, center.col + dc);
      const Vec3 p = ray.o + depth_along_ray * ray.d;
      const Projection proj = project(dst, p);
      if (!proj.in_front || !dst_img.in_bounds_bilinear(proj.v, proj.u)) return out;  // valid=false
      out.rgb[i] = dst_img.bilinear(proj.v, proj.u);
    }
  out.valid = true;
  return out;
}

PatchSamples source_patch(const Camera& src, const Pixel& center, int k, const Image& src_img) {
  (void)src;
  PatchSamples out;
  out.k = k;
  out.rgb.reserve(static_cast<size_t>(k) * k);
  const int h = k / 2;
  for (int dr = -h; dr <= h; ++dr)
    for (int dc = -h; dc <= h; ++dc)
      out.rgb.push_back(src_img.bilinear_clamped(center.row + dr, center.col + dc));
  out.valid = true;
  return out;
}

double patch_mse(const PatchSamples& a, const PatchSamples& b) {
  if (!a.valid || !b.valid || a.rgb.size() != b.rgb.size())
    return std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (size_t i = 0; i < a.rgb.size(); ++i) {
    const Vec3 d = a.rgb[i] - b.rgb[i];
    acc += (d.x * d.x + d.y * d.y + d.z * d.z) / 3.0;
  }
  return acc / static_cast<double>(a.rgb.size());
}

Ray ndc_transform(const Camera& cam, const Ray& ray) {
  // Work in the camera frame, then shift the origin to the near plane.
  const Mat4 inv = cam.pose.rigid_inverse();
  const Vec3 oc = inv.transform_point(ray.o);
  const Vec3 dc = inv.transform_dir(ray.d);
  const double tn = (cam.near - oc.z) / dc.z;
  const Vec3 o = oc + tn * dc;
  const Ray cam_ray{o, dc};
  const double wx = cam.fx / (cam.width / 2.0);
  const double wy = cam.fy / (cam.height / 2.0);
  Ray out;
  out.o = {wx * o.x / o.z, wy * o.y / o.z, 1.0 - 2.0 * cam.near / o.z};
  out.d = {wx * (cam_ray.d.x / cam_ray.d.z - o.x / o.z), wy * (cam_ray.d.y / cam_ray.d.z - o.y / o.z),
           2.0 * cam.near / o.z};
  return out;
}

int nearest_view(const std::vector<Camera>& cams, int src) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  const Vec3 c = cams[static_cast<size_t>(src)].center();
  for (size_t i = 0; i < cams.size(); ++i) {
    if (static_cast<int>(i) == src) continue;
    const double d = (cams[i].center() - c).norm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  if (best < 0) throw std::invalid_argument("nearest_view: need at least two cameras");
  return best;
}

}  // namespace simplerf
