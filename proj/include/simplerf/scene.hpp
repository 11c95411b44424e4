#pragma once

#include <string>
#include <vector>

#include "simplerf/camera.hpp"
#include "simplerf/image.hpp"
#include "simplerf/tensorf.hpp"

namespace simplerf {

enum class TextureKind { Solid, Checker, Gradient };

struct Texture {
  TextureKind kind = TextureKind::Solid;
  Vec3 color_a{0.8, 0.8, 0.8};
  Vec3 color_b{0.2, 0.2, 0.2};
  double freq = 1.0;  // checker cells per world unit
};

struct Material {
  Texture albedo;
  double specular = 0.0;  // > 0 enables the Phong lobe
  double shininess = 16.0;
};

enum class PrimKind { Sphere, Plane, Box };

struct Primitive {
  PrimKind kind = PrimKind::Sphere;
  Vec3 center;       // sphere/box center, point on plane
  double radius = 1; // sphere
  Vec3 normal{0, 0, -1};  // plane
  Vec3 half{1, 1, 1};     // box half extents, axis aligned
  Material mat;
};

struct DirLight {
  Vec3 toward;  // unit vector from surface toward the light
  double intensity = 1.0;
};

struct SceneSpec {
  std::string name;
  std::vector<Primitive> prims;
  std::vector<DirLight> lights;
  double ambient = 0.25;
  Vec3 background{0, 0, 0};
  std::vector<Camera> train_rig;  // candidate training cameras
  std::vector<Camera> test_rig;
  BBox bbox;
  double near = 0.8, far = 7.0;
};

struct TraceResult {
  Vec3 color;
  double depth = 0.0;  // distance along the unit ray; +inf on miss
  bool hit = false;
};

// Closest-hit shading: local Lambertian + optional Phong lobe, directional
// lights, no shadow rays.
TraceResult trace(const SceneSpec& scene, const Ray& ray);

struct View {
  Camera cam;
  Image image;
  DepthMap depth;
};

struct Keypoint {
  int view = 0;
  Pixel pixel;
  double depth = 0.0;
};

struct SceneBundle {
  std::string scene_name;
  std::vector<View> views;
  std::vector<int> train_ids;
  std::vector<int> test_ids;
  std::vector<Keypoint> keypoints;
  BBox bbox;
  double near = 0.0, far = 0.0;
};

View render_view(const SceneSpec& scene, const Camera& cam);

// Renders the rig (train subset chosen evenly from the candidates, plus every
// test view), detects keypoints at image-gradient maxima on train views, and
// perturbs their depths with N(0, kp_sigma). Images are quantized to the
// 8-bit values that land on disk.
SceneBundle generate_bundle(const SceneSpec& scene, int n_train, double kp_density, double kp_sigma,
                            uint64_t seed);

// Cameras on an arc looking at `target`; y_offset displaces the eye along
// world y, theta_offset rotates the whole arc.
std::vector<Camera> arc_rig(const Vec3& target, double radius, int n, double theta_span_deg,
                            double y_offset, double theta_offset_deg, int image_size, double near,
                            double far);

// Named deterministic scenes: "plain-box", "floater-bait", "shiny",
// "near-cam-trap".
std::vector<SceneSpec> scene_catalog(int image_size = 64, int n_train_candidates = 4, int n_test = 8);
SceneSpec scene_by_name(const std::string& name, int image_size = 64, int n_train_candidates = 4,
                        int n_test = 8);

}  // namespace simplerf
