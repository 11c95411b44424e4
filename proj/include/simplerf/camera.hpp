#pragma once

#include <string>
#include <vector>

#include "simplerf/geometry.hpp"
#include "simplerf/image.hpp"

namespace simplerf {

struct Pixel {
  int row = 0;
  int col = 0;
};

// Pinhole camera. `pose` is world-from-camera; camera frame x right, y down,
// z forward, so the optical axis in world space is pose.col3(2). Continuous
// image coordinates (u along columns, v along rows) put integer pixel indices
// at pixel centers.
struct Camera {
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
  int width = 0, height = 0;
  Mat4 pose = Mat4::identity();
  double near = 0.0, far = 0.0;

  void validate() const;  // throws std::invalid_argument
  Vec3 center() const { return pose.translation(); }
  Vec3 optical_axis() const { return pose.col3(2); }
};

struct RayBatch {
  std::vector<Ray> rays;       // unit-norm world directions
  std::vector<Pixel> pixels;   // source pixel per ray
  size_t size() const { return rays.size(); }
};

RayBatch generate_rays(const Camera& cam, const std::vector<Pixel>& pixels);
Ray ray_through(const Camera& cam, double row, double col);

struct Projection {
  double u = 0.0;      // column coordinate
  double v = 0.0;      // row coordinate
  double depth = 0.0;  // camera-space z
  bool in_front = false;
};

Projection project(const Camera& cam, const Vec3& world_point);

// Lifts the k x k pixel patch centered on `center` with one depth value
// (distance along each pixel's own unit ray), projects the points into dst
// and bilinearly samples dst_img. Any sample behind dst or outside the
// bilinear footprint invalidates the whole patch.
struct PatchSamples {
  int k = 0;
  std::vector<Vec3> rgb;  // k*k, row-major over the patch
  bool valid = false;
};

PatchSamples reproject_patch(const Camera& src, const Camera& dst, const Pixel& center,
                             double depth_along_ray, int k, const Image& dst_img);

// Clamped-edge samples of the same patch in the source image (the reference
// side of a reprojection comparison).
PatchSamples source_patch(const Camera& src, const Pixel& center, int k, const Image& src_img);

// Mean squared RGB difference over two equal-size patches.
double patch_mse(const PatchSamples& a, const PatchSamples& b);

// NeRF-style forward-facing reparameterization for a +z-forward camera: the
// origin is advanced to the near plane, then mapped so z=near -> -1 and
// z=inf -> +1. Points o + t d map to o' + t' d' with t' in [0,1).
Ray ndc_transform(const Camera& cam, const Ray& ray);

// Index of the train view whose camera center is closest to view `src`
// (itself excluded); ties break toward the lowest index.
int nearest_view(const std::vector<Camera>& cams, int src);

}  // namespace simplerf
