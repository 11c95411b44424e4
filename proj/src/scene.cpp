#include "simplerf/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "simplerf/array.hpp"

namespace simplerf {

namespace {

constexpr double kTMin = 1e-9;
constexpr double kPi = 3.14159265358979323846;

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Vec3 normal;
  const Primitive* prim = nullptr;
};

bool hit_sphere(const Primitive& p, const Ray& ray, double& t, Vec3& n) {
  const Vec3 oc = ray.o - p.center;
  const double b = oc.dot(ray.d);
  const double c = oc.dot(oc) - p.radius * p.radius;
  const double disc = b * b - c;
  if (disc < 0) return false;
  const double s = std::sqrt(disc);
  double root = -b - s;
  if (root <= kTMin) root = -b + s;
  if (root <= kTMin) return false;
  t = root;
  n = (ray.at(t) - p.center).normalized();
  return true;
}

bool hit_plane(const Primitive& p, const Ray& ray, double& t, Vec3& n) {
  const double denom = ray.d.dot(p.normal);
  if (std::abs(denom) < 1e-12) return false;
  const double root = (p.center - ray.o).dot(p.normal) / denom;
  if (root <= kTMin) return false;
  t = root;
  n = denom < 0 ? p.normal : -p.normal;
  return true;
}

bool hit_box(const Primitive& p, const Ray& ray, double& t, Vec3& n) {
  const Vec3 lo = p.center - p.half;
  const Vec3 hi = p.center + p.half;
  double t0 = kTMin, t1 = std::numeric_limits<double>::infinity();
  int axis0 = -1;
  for (int a = 0; a < 3; ++a) {
    const double inv = 1.0 / ray.d[a];
    double ta = (lo[a] - ray.o[a]) * inv;
    double tb = (hi[a] - ray.o[a]) * inv;
    if (ta > tb) std::swap(ta, tb);
    if (ta > t0) {
      t0 = ta;
      axis0 = a;
    }
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  if (axis0 < 0) return false;  // origin inside the box
  t = t0;
  n = Vec3{0, 0, 0};
  n[axis0] = ray.d[axis0] > 0 ? -1.0 : 1.0;
  return true;
}

Vec3 albedo_at(const SceneSpec& scene, const Material& mat, const Vec3& p) {
  const Texture& tex = mat.albedo;
  switch (tex.kind) {
    case TextureKind::Solid:
      return tex.color_a;
    case TextureKind::Checker: {
      const long long parity = static_cast<long long>(std::floor(p.x * tex.freq)) +
                               static_cast<long long>(std::floor(p.y * tex.freq)) +
                               static_cast<long long>(std::floor(p.z * tex.freq));
      return (parity & 1) ? tex.color_b : tex.color_a;
    }
    case TextureKind::Gradient: {
      const double span = std::max(scene.bbox.hi.x - scene.bbox.lo.x, 1e-9);
      const double u = std::clamp((p.x - scene.bbox.lo.x) / span, 0.0, 1.0);
      return tex.color_a * (1.0 - u) + tex.color_b * u;
    }
  }
  return tex.color_a;
}

Vec3 shade(const SceneSpec& scene, const Hit& hit, const Ray& ray) {
  const Vec3 p = ray.at(hit.t);
  const Vec3 albedo = albedo_at(scene, hit.prim->mat, p);
  const Vec3 v = -ray.d;
  double diffuse = scene.ambient;
  double spec = 0.0;
  for (const DirLight& light : scene.lights) {
    const double ndotl = hit.normal.dot(light.toward);
    if (ndotl <= 0) continue;
    diffuse += light.intensity * ndotl;
    if (hit.prim->mat.specular > 0) {
      const Vec3 r = hit.normal * (2.0 * ndotl) - light.toward;
      const double rv = r.dot(v);
      if (rv > 0) spec += light.intensity * std::pow(rv, hit.prim->mat.shininess);
    }
  }
  Vec3 c = albedo * diffuse + Vec3{1, 1, 1} * (hit.prim->mat.specular * spec);
  return Vec3{std::clamp(c.x, 0.0, 1.0), std::clamp(c.y, 0.0, 1.0), std::clamp(c.z, 0.0, 1.0)};
}

}  // namespace

TraceResult trace(const SceneSpec& scene, const Ray& ray) {
  Hit best;
  for (const Primitive& prim : scene.prims) {
    double t;
    Vec3 n;
    bool ok = false;
    switch (prim.kind) {
      case PrimKind::Sphere: ok = hit_sphere(prim, ray, t, n); break;
      case PrimKind::Plane: ok = hit_plane(prim, ray, t, n); break;
      case PrimKind::Box: ok = hit_box(prim, ray, t, n); break;
    }
    if (ok && t < best.t) {
      best.t = t;
      best.normal = n;
      best.prim = &prim;
    }
  }
  TraceResult out;
  if (!best.prim) {
    out.color = scene.background;
    out.depth = std::numeric_limits<double>::infinity();
    out.hit = false;
    return out;
  }
  out.color = shade(scene, best, ray);
  out.depth = best.t;
  out.hit = true;
  return out;
}

View render_view(const SceneSpec& scene, const Camera& cam) {
  View view;
  view.cam = cam;
  view.image = Image(cam.width, cam.height);
  view.depth = DepthMap(cam.width, cam.height);
  for (int r = 0; r < cam.height; ++r) {
    for (int c = 0; c < cam.width; ++c) {
      const TraceResult res = trace(scene, ray_through(cam, r, c));
      view.image.set(r, c, res.color);
      view.depth.at(r, c) = res.depth;
    }
  }
  return view;
}

std::vector<Camera> arc_rig(const Vec3& target, double radius, int n, double theta_span_deg,
                            double y_offset, double theta_offset_deg, int image_size, double near,
                            double far) {
  if (n <= 0) throw std::invalid_argument("arc_rig: n must be positive");
  std::vector<Camera> rig;
  rig.reserve(static_cast<size_t>(n));
  const double span = theta_span_deg * kPi / 180.0;
  const double offset = theta_offset_deg * kPi / 180.0;
  for (int i = 0; i < n; ++i) {
    const double frac = n == 1 ? 0.5 : static_cast<double>(i) / (n - 1);
    const double theta = offset + span * (frac - 0.5);
    const Vec3 eye{target.x + radius * std::sin(theta), target.y + y_offset,
                   target.z - radius * std::cos(theta)};
    Camera cam;
    cam.width = image_size;
    cam.height = image_size;
    cam.fx = cam.fy = 0.5 * image_size / std::tan(25.0 * kPi / 180.0);
    cam.cx = 0.5 * (image_size - 1);
    cam.cy = 0.5 * (image_size - 1);
    cam.pose = look_at(eye, target);
    cam.near = near;
    cam.far = far;
    cam.validate();
    rig.push_back(cam);
  }
  return rig;
}

namespace {

Primitive wall_slab(double z, double half_xy, const Texture& tex) {
  Primitive p;
  p.kind = PrimKind::Box;
  p.center = Vec3{0, 0, z + 0.05};
  p.half = Vec3{half_xy, half_xy, 0.05};
  p.mat.albedo = tex;
  return p;
}

SceneSpec base_scene(const std::string& name, int image_size, int n_train, int n_test) {
  SceneSpec s;
  s.name = name;
  s.lights = {{Vec3{-0.35, -0.80, -0.49}.normalized(), 0.9},
              {Vec3{0.55, -0.25, -0.80}.normalized(), 0.35}};
  s.ambient = 0.25;
  s.background = Vec3{0, 0, 0};
  s.near = 0.8;
  s.far = 7.0;
  s.bbox = BBox{Vec3{-2.7, -2.7, -1.6}, Vec3{2.7, 2.7, 2.15}};
  const Vec3 target{0, 0, 0.5};
  s.train_rig = arc_rig(target, 3.2, n_train, 50.0, 0.0, 0.0, image_size, s.near, s.far);
  const double test_step = n_train > 1 ? 50.0 / (n_train - 1) : 0.0;
  s.test_rig = arc_rig(target, 3.2, n_test, 44.0, -0.35, 0.5 * test_step, image_size, s.near, s.far);
  return s;
}

}  // namespace

std::vector<SceneSpec> scene_catalog(int image_size, int n_train_candidates, int n_test) {
  std::vector<SceneSpec> scenes;

  {
    SceneSpec s = base_scene("plain-box", image_size, n_train_candidates, n_test);
    Texture wall{TextureKind::Checker, Vec3{0.85, 0.82, 0.78}, Vec3{0.22, 0.24, 0.30}, 1.1};
    s.prims.push_back(wall_slab(2.0, 2.7, wall));
    Primitive box;
    box.kind = PrimKind::Box;
    box.center = Vec3{0.1, 0.25, 0.5};
    box.half = Vec3{0.55, 0.55, 0.55};
    box.mat.albedo = {TextureKind::Gradient, Vec3{0.9, 0.45, 0.12}, Vec3{0.15, 0.35, 0.85}, 1.0};
    s.prims.push_back(box);
    scenes.push_back(std::move(s));
  }

  {
    SceneSpec s = base_scene("floater-bait", image_size, n_train_candidates, n_test);
    Texture wall{TextureKind::Checker, Vec3{0.92, 0.90, 0.86}, Vec3{0.10, 0.12, 0.16}, 2.2};
    s.prims.push_back(wall_slab(2.0, 2.7, wall));
    Primitive bar;
    bar.kind = PrimKind::Box;
    bar.center = Vec3{0.0, -0.1, 0.3};
    bar.half = Vec3{2.6, 0.08, 0.06};
    bar.mat.albedo = {TextureKind::Solid, Vec3{0.85, 0.15, 0.12}, Vec3{0, 0, 0}, 1.0};
    s.prims.push_back(bar);
    scenes.push_back(std::move(s));
  }

  {
    SceneSpec s = base_scene("shiny", image_size, n_train_candidates, n_test);
    Texture wall{TextureKind::Checker, Vec3{0.80, 0.83, 0.88}, Vec3{0.18, 0.20, 0.26}, 1.4};
    s.prims.push_back(wall_slab(2.0, 2.7, wall));
    Primitive ball;
    ball.kind = PrimKind::Sphere;
    ball.center = Vec3{0.0, 0.1, 0.6};
    ball.radius = 0.75;
    ball.mat.albedo = {TextureKind::Solid, Vec3{0.10, 0.16, 0.42}, Vec3{0, 0, 0}, 1.0};
    ball.mat.specular = 0.9;
    ball.mat.shininess = 24.0;
    s.prims.push_back(ball);
    scenes.push_back(std::move(s));
  }

  {
    SceneSpec s = base_scene("near-cam-trap", image_size, n_train_candidates, n_test);
    Texture wall{TextureKind::Checker, Vec3{0.86, 0.84, 0.80}, Vec3{0.20, 0.22, 0.28}, 1.3};
    s.prims.push_back(wall_slab(2.0, 2.7, wall));
    Primitive box;
    box.kind = PrimKind::Box;
    box.center = Vec3{0.35, 0.2, 0.8};
    box.half = Vec3{0.45, 0.45, 0.45};
    box.mat.albedo = {TextureKind::Gradient, Vec3{0.75, 0.6, 0.2}, Vec3{0.2, 0.65, 0.5}, 1.0};
    s.prims.push_back(box);
    Primitive lure;
    lure.kind = PrimKind::Sphere;
    lure.center = Vec3{-1.05, -0.35, -1.05};
    lure.radius = 0.28;
    lure.mat.albedo = {TextureKind::Solid, Vec3{0.2, 0.8, 0.25}, Vec3{0, 0, 0}, 1.0};
    s.prims.push_back(lure);
    scenes.push_back(std::move(s));
  }

  return scenes;
}

SceneSpec scene_by_name(const std::string& name, int image_size, int n_train_candidates,
                        int n_test) {
  for (SceneSpec& s : scene_catalog(image_size, n_train_candidates, n_test)) {
    if (s.name == name) return std::move(s);
  }
  throw std::invalid_argument("unknown scene: " + name);
}

SceneBundle generate_bundle(const SceneSpec& scene, int n_train, double kp_density,
                            double kp_sigma, uint64_t seed) {
  if (n_train <= 0 || n_train > static_cast<int>(scene.train_rig.size()))
    throw std::invalid_argument("generate_bundle: n_train out of range");
  SceneBundle bundle;
  bundle.scene_name = scene.name;
  bundle.bbox = scene.bbox;
  bundle.near = scene.near;
  bundle.far = scene.far;

  const int candidates = static_cast<int>(scene.train_rig.size());
  std::vector<int> picks;
  for (int i = 0; i < n_train; ++i) {
    const double frac = n_train == 1 ? 0.5 : static_cast<double>(i) / (n_train - 1);
    picks.push_back(static_cast<int>(std::lround(frac * (candidates - 1))));
  }

  ad::Rng rng(seed);
  for (int idx : picks) {
    View v = render_view(scene, scene.train_rig[static_cast<size_t>(idx)]);
    v.image = v.image.quantized();
    bundle.train_ids.push_back(static_cast<int>(bundle.views.size()));
    bundle.views.push_back(std::move(v));
  }
  for (const Camera& cam : scene.test_rig) {
    View v = render_view(scene, cam);
    v.image = v.image.quantized();
    bundle.test_ids.push_back(static_cast<int>(bundle.views.size()));
    bundle.views.push_back(std::move(v));
  }

  // Keypoints: texture edges from the image gradient, thinned to an even
  // subset so the count tracks density exactly.
  constexpr double kEdgeThreshold = 0.08;
  for (int vid : bundle.train_ids) {
    const View& view = bundle.views[static_cast<size_t>(vid)];
    const std::vector<double> mag = gradient_magnitude(view.image);
    std::vector<Pixel> edges;
    for (int r = 0; r < view.cam.height; ++r) {
      for (int c = 0; c < view.cam.width; ++c) {
        const double g = mag[static_cast<size_t>(r) * view.cam.width + c];
        if (g > kEdgeThreshold && std::isfinite(view.depth.at(r, c))) edges.push_back(Pixel{r, c});
      }
    }
    const int want = static_cast<int>(std::lround(kp_density * static_cast<double>(edges.size())));
    for (int i = 0; i < want; ++i) {
      const auto pick = static_cast<size_t>((i + 0.5) * static_cast<double>(edges.size()) / want);
      const Pixel px = edges[std::min(pick, edges.size() - 1)];
      Keypoint kp;
      kp.view = vid;
      kp.pixel = px;
      kp.depth = std::max(1e-3, view.depth.at(px.row, px.col) + kp_sigma * rng.normal());
      bundle.keypoints.push_back(kp);
    }
  }
  return bundle;
}

}  // namespace simplerf
