#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "doctest.h"
#include "simplerf/metrics.hpp"
#include "simplerf/scene.hpp"

using namespace simplerf;

namespace {

Pixel brightest(const Image& img) {
  Pixel best{0, 0};
  double lum = -1.0;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      const Vec3 v = img.get(r, c);
      const double l = v.x + v.y + v.z;
      if (l > lum) {
        lum = l;
        best = {r, c};
      }
    }
  return best;
}

}  // namespace

TEST_CASE("the catalog names four distinct scenes") {
  const auto scenes = scene_catalog(16, 3, 1);
  REQUIRE(scenes.size() == 4);
  std::set<std::string> names;
  for (const auto& s : scenes) names.insert(s.name);
  CHECK(names.count("plain-box") == 1);
  CHECK(names.count("floater-bait") == 1);
  CHECK(names.count("shiny") == 1);
  CHECK(names.count("near-cam-trap") == 1);
  CHECK_THROWS_AS(scene_by_name("bogus", 16, 3, 1), std::invalid_argument);
}

TEST_CASE("arc rig cameras orbit the target at fixed radius") {
  const Vec3 target{0, 0, 0.5};
  const auto rig = arc_rig(target, 3.2, 5, 50.0, 0.0, 0.0, 32, 0.8, 7.0);
  REQUIRE(rig.size() == 5);
  for (const Camera& cam : rig) {
    CHECK((cam.center() - target).norm() == doctest::Approx(3.2));
    const Vec3 toward = (target - cam.center()).normalized();
    const Vec3 axis = cam.optical_axis();
    CHECK(axis.dot(toward) == doctest::Approx(1.0));
  }
  CHECK((rig[0].center() - rig[4].center()).norm() > 1.0);
}

TEST_CASE("tracing hits the scene or reports an infinite miss") {
  const SceneSpec spec = scene_by_name("plain-box", 32, 3, 1);
  const Camera cam = spec.train_rig[1];
  const TraceResult hit = trace(spec, ray_through(cam, 15, 15));
  CHECK(hit.hit);
  CHECK(hit.depth > spec.near);
  CHECK(hit.depth < spec.far);

  Ray away = ray_through(cam, 15, 15);
  away.d = -away.d;
  const TraceResult miss = trace(spec, away);
  CHECK_FALSE(miss.hit);
  CHECK(std::isinf(miss.depth));
  CHECK(miss.color.x == spec.background.x);
}

TEST_CASE("bundle generation is reproducible and picks spread-out train views") {
  const SceneSpec spec = scene_by_name("plain-box", 24, 8, 2);
  const SceneBundle a = generate_bundle(spec, 3, 0.25, 0.05, 42);
  const SceneBundle b = generate_bundle(spec, 3, 0.25, 0.05, 42);
  REQUIRE(a.views.size() == 5);
  CHECK(a.train_ids == std::vector<int>{0, 1, 2});
  CHECK(a.test_ids == std::vector<int>{3, 4});
  CHECK(a.near == spec.near);
  CHECK(a.bbox.lo.z == spec.bbox.lo.z);

  for (size_t v = 0; v < a.views.size(); ++v) {
    CHECK(a.views[v].image.data == b.views[v].image.data);
    CHECK(a.views[v].depth.z == b.views[v].depth.z);
  }
  REQUIRE(a.keypoints.size() == b.keypoints.size());
  for (size_t i = 0; i < a.keypoints.size(); ++i)
    CHECK(a.keypoints[i].depth == b.keypoints[i].depth);

  // Train cameras 0 and 2 sit at the arc ends, so they are well separated.
  const double spread = (a.views[0].cam.center() - a.views[2].cam.center()).norm();
  CHECK(spread > 2.0);

  const SceneBundle c = generate_bundle(spec, 3, 0.25, 0.05, 43);
  bool any_depth_differs = false;
  for (size_t i = 0; i < std::min(a.keypoints.size(), c.keypoints.size()); ++i)
    any_depth_differs |= a.keypoints[i].depth != c.keypoints[i].depth;
  CHECK(any_depth_differs);
}

TEST_CASE("images round-trip the 8-bit lattice") {
  const SceneBundle b = generate_bundle(scene_by_name("plain-box", 16, 3, 1), 3, 0.0, 0.0, 1);
  for (const double v : b.views[0].image.data) {
    CHECK(v * 255.0 == doctest::Approx(std::round(v * 255.0)).epsilon(1e-12));
  }
}

TEST_CASE("keypoint counts follow the density exactly") {
  const SceneSpec spec = scene_by_name("floater-bait", 32, 3, 1);
  for (const double density : {0.1, 0.25, 0.5}) {
    const SceneBundle b = generate_bundle(spec, 3, density, 0.0, 9);
    size_t expected = 0;
    for (int vid : b.train_ids) {
      const View& view = b.views[static_cast<size_t>(vid)];
      const std::vector<double> mag = gradient_magnitude(view.image);
      int64_t edges = 0;
      for (int r = 0; r < view.cam.height; ++r)
        for (int c = 0; c < view.cam.width; ++c)
          if (mag[static_cast<size_t>(r) * view.cam.width + c] > 0.08 &&
              std::isfinite(view.depth.at(r, c)))
            ++edges;
      expected += static_cast<size_t>(std::lround(density * static_cast<double>(edges)));
    }
    CHECK(b.keypoints.size() == expected);
  }
}

TEST_CASE("noise-free keypoints carry exact surface depth") {
  const SceneBundle b = generate_bundle(scene_by_name("plain-box", 32, 3, 1), 3, 0.3, 0.0, 11);
  REQUIRE(!b.keypoints.empty());
  for (const Keypoint& kp : b.keypoints) {
    const View& view = b.views[static_cast<size_t>(kp.view)];
    CHECK(kp.depth == view.depth.at(kp.pixel.row, kp.pixel.col));
  }
}

TEST_CASE("noisy keypoints scatter around the surface") {
  const SceneBundle b = generate_bundle(scene_by_name("plain-box", 32, 3, 1), 3, 0.3, 0.05, 11);
  REQUIRE(b.keypoints.size() > 10);
  int off_surface = 0;
  for (const Keypoint& kp : b.keypoints) {
    const View& view = b.views[static_cast<size_t>(kp.view)];
    const double err = std::abs(kp.depth - view.depth.at(kp.pixel.row, kp.pixel.col));
    CHECK(err < 0.5);
    if (err > 1e-12) ++off_surface;
    CHECK(kp.depth > 0.0);
  }
  CHECK(off_surface == static_cast<int>(b.keypoints.size()));
}

TEST_CASE("the bait scene hangs one thin structure in front of the wall") {
  const SceneSpec spec = scene_by_name("floater-bait", 64, 3, 1);
  const View view = render_view(spec, spec.train_rig[1]);

  std::vector<int> bar_rows;
  for (int r = 0; r < 64; ++r) {
    bool near_structure = false;
    for (int c = 0; c < 64; ++c) {
      const double d = view.depth.at(r, c);
      if (std::isfinite(d) && d < 4.0) near_structure = true;
    }
    if (near_structure) bar_rows.push_back(r);
  }
  REQUIRE(bar_rows.size() >= 2);
  CHECK(bar_rows.size() < 12);
  CHECK(bar_rows.back() - bar_rows.front() + 1 == static_cast<int>(bar_rows.size()));
  CHECK(bar_rows.front() > 20);
  CHECK(bar_rows.back() < 48);

  // Wall pixels sit well behind the bar.
  int wall_pixels = 0;
  for (const double d : view.depth.z)
    if (std::isfinite(d) && d > 4.0) ++wall_pixels;
  CHECK(wall_pixels > 64 * 64 / 2);
}

TEST_CASE("the shiny scene moves its highlight across views") {
  const SceneSpec spec = scene_by_name("shiny", 64, 3, 1);
  const View left = render_view(spec, spec.train_rig[0]);
  const View right = render_view(spec, spec.train_rig[2]);
  const Pixel a = brightest(left.image);
  const Pixel b = brightest(right.image);
  CHECK(std::abs(a.col - b.col) >= 2);
}

TEST_CASE("the trap scene puts a lure much closer than the backdrop") {
  const SceneSpec spec = scene_by_name("near-cam-trap", 64, 3, 1);
  const View view = render_view(spec, spec.train_rig[0]);
  double min_depth = std::numeric_limits<double>::infinity();
  std::vector<double> finite;
  for (const double d : view.depth.z)
    if (std::isfinite(d)) {
      min_depth = std::min(min_depth, d);
      finite.push_back(d);
    }
  REQUIRE(!finite.empty());
  CHECK(min_depth < 2.2);
  CHECK(median(finite) > 2.0 * min_depth);
}
