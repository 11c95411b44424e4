#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "simplerf/scene.hpp"
#include "simplerf/volume.hpp"

using namespace simplerf;

namespace {

// Direct per-ray transmittance recurrence, kept independent of the tape ops.
std::vector<double> reference_weights(const std::vector<double>& sigma,
                                      const std::vector<double>& delta) {
  std::vector<double> w(sigma.size());
  double acc = 0.0;
  for (size_t i = 0; i < sigma.size(); ++i) {
    const double trans = std::exp(-acc);
    w[i] = trans * (1.0 - std::exp(-delta[i] * sigma[i]));
    acc += delta[i] * sigma[i];
  }
  return w;
}

}  // namespace

TEST_CASE("stratified samples without jitter sit at stratum midpoints") {
  const SampleSet s = sample_stratified(2, 4, 1.0, 5.0, false, 0.0, false, nullptr);
  REQUIRE(s.n == 4);
  const double expected[] = {1.5, 2.5, 3.5, 4.5};
  for (int r = 0; r < 2; ++r)
    for (int j = 0; j < 4; ++j) {
      CHECK(s.z.at(r, j) == doctest::Approx(expected[j]));
      CHECK(s.delta.at(r, j) == doctest::Approx(1.0));
    }
}

TEST_CASE("disparity samples are uniform in inverse depth") {
  const SampleSet s = sample_stratified(1, 2, 1.0, 4.0, true, 0.0, false, nullptr);
  CHECK(s.z.at(0, 0) == doctest::Approx(16.0 / 13.0));
  CHECK(s.z.at(0, 1) == doctest::Approx(16.0 / 7.0));
  CHECK(s.delta.at(0, 0) == doctest::Approx(16.0 / 7.0 - 16.0 / 13.0));
  CHECK(s.delta.at(0, 1) == doctest::Approx(1.5));
}

TEST_CASE("raised window start advances the near bound in disparity") {
  CHECK(z_from_s(0.5, 1.0, 5.0) == doctest::Approx(5.0 / 3.0));
  const SampleSet s = sample_stratified(1, 2, 1.0, 5.0, false, 0.5, false, nullptr);
  CHECK(s.z.at(0, 0) == doctest::Approx(2.5));
  CHECK(s.z.at(0, 1) == doctest::Approx(25.0 / 6.0));
}

TEST_CASE("s and z parameterizations invert each other") {
  const double inf = std::numeric_limits<double>::infinity();
  for (const double z : {1.0, 1.7, 3.2, 5.0})
    CHECK(z_from_s(s_from_z(z, 1.0, 5.0), 1.0, 5.0) == doctest::Approx(z));
  CHECK(s_from_z(1.0, 1.0, 5.0) == doctest::Approx(0.0));
  CHECK(s_from_z(5.0, 1.0, 5.0) == doctest::Approx(1.0));
  CHECK(s_from_z(2.0, 1.0, inf) == doctest::Approx(0.5));
}

TEST_CASE("jittered samples stay inside their strata and replay by seed") {
  ad::Rng rng_a(11), rng_b(11);
  const SampleSet a = sample_stratified(3, 8, 1.0, 5.0, false, 0.0, true, &rng_a);
  const SampleSet b = sample_stratified(3, 8, 1.0, 5.0, false, 0.0, true, &rng_b);
  for (int r = 0; r < 3; ++r)
    for (int j = 0; j < 8; ++j) {
      CHECK(a.z.at(r, j) == b.z.at(r, j));
      CHECK(a.z.at(r, j) >= 1.0 + 0.5 * j);
      CHECK(a.z.at(r, j) <= 1.0 + 0.5 * (j + 1));
    }
  CHECK_THROWS_AS(sample_stratified(1, 4, 1.0, 5.0, false, 0.0, true, nullptr),
                  std::invalid_argument);
}

TEST_CASE("pdf resampling concentrates in the winning bin") {
  const std::vector<double> z = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> w = {0.0, 1.0, 0.0, 0.0};
  const std::vector<double> out = sample_pdf(z, w, 2, 1e-5, false, nullptr);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == doctest::Approx(1.75).epsilon(1e-3));
  CHECK(out[1] == doctest::Approx(2.25).epsilon(1e-3));
  for (const double v : out) {
    CHECK(v >= 1.5);
    CHECK(v <= 2.5);
  }
}

TEST_CASE("pdf resampling output is sorted and spans the sample range") {
  const std::vector<double> z = {1.0, 1.5, 2.5, 4.0, 5.0};
  const std::vector<double> w = {0.2, 0.3, 0.1, 0.25, 0.15};
  const std::vector<double> out = sample_pdf(z, w, 16, 1e-5, false, nullptr);
  for (size_t i = 1; i < out.size(); ++i) CHECK(out[i] >= out[i - 1]);
  CHECK(out.front() >= z.front());
  CHECK(out.back() <= z.back());
}

TEST_CASE("merging keeps rows sorted and recomputes gaps") {
  SampleSet coarse = sample_set_from({{1.5, 3.0, 4.5}}, 1.0, 5.0);
  const SampleSet merged = merge_samples(coarse, {{2.0, 3.5}}, 1.0, 5.0);
  REQUIRE(merged.n == 5);
  const double expected[] = {1.5, 2.0, 3.0, 3.5, 4.5};
  for (int j = 0; j < 5; ++j) CHECK(merged.z.at(0, j) == doctest::Approx(expected[j]));
  for (int j = 0; j + 1 < 5; ++j)
    CHECK(merged.delta.at(0, j) == doctest::Approx(expected[j + 1] - expected[j]));
  CHECK(merged.delta.at(0, 4) == doctest::Approx(4.0 / 5.0));
}

TEST_CASE("render weights match the transmittance recurrence") {
  const SampleSet s = sample_stratified(1, 6, 1.0, 5.0, false, 0.0, false, nullptr);
  const std::vector<double> sig = {0.3, 1.2, 0.0, 2.5, 0.7, 4.0};
  std::vector<double> deltas(6);
  for (int j = 0; j < 6; ++j) deltas[j] = s.delta.at(0, j);
  ad::Tape t;
  ad::Array sig_arr(1, 6);
  std::copy(sig.begin(), sig.end(), sig_arr.data.begin());
  const ad::Var w = render_weights(t, t.constant(sig_arr), s.delta);
  const std::vector<double> expect = reference_weights(sig, deltas);
  double total = 0.0, optical = 0.0;
  for (int j = 0; j < 6; ++j) {
    CHECK(t.val(w)[j] == doctest::Approx(expect[j]).epsilon(1e-12));
    total += t.val(w)[j];
    optical += deltas[j] * sig[j];
  }
  CHECK(total == doctest::Approx(1.0 - std::exp(-optical)).epsilon(1e-12));
}

TEST_CASE("an opaque sample captures the ray") {
  const SampleSet s = sample_stratified(1, 4, 1.0, 5.0, false, 0.0, false, nullptr);
  ad::Tape t;
  ad::Array sig(1, 4);
  sig.at(0, 2) = 1e4;
  ad::Array rgb(4, 3);
  for (int j = 0; j < 4; ++j) {
    rgb.at(j, 0) = 0.1 * j;
    rgb.at(j, 1) = 0.9 - 0.1 * j;
    rgb.at(j, 2) = 0.5;
  }
  const RenderOut out = composite(t, t.constant(sig), t.constant(rgb), s, Vec3{1, 1, 1});
  CHECK(t.val(out.color)[0] == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(t.val(out.color)[1] == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(t.val(out.depth)[0] == doctest::Approx(3.5).epsilon(1e-9));
  CHECK(t.val(out.opacity)[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(t.val(out.depth_norm)[0] == doctest::Approx(3.5).epsilon(1e-9));
}

TEST_CASE("an empty ray renders the background") {
  const SampleSet s = sample_stratified(1, 4, 1.0, 5.0, false, 0.0, false, nullptr);
  ad::Tape t;
  const RenderOut out =
      composite(t, t.constant(ad::Array(1, 4)), t.constant(ad::Array(4, 3)), s, Vec3{0.2, 0.4, 0.6});
  CHECK(t.val(out.color)[0] == doctest::Approx(0.2));
  CHECK(t.val(out.color)[1] == doctest::Approx(0.4));
  CHECK(t.val(out.color)[2] == doctest::Approx(0.6));
  CHECK(t.val(out.opacity)[0] == doctest::Approx(0.0));
  CHECK(t.val(out.depth)[0] == doctest::Approx(0.0));
}

TEST_CASE("expected depth is the weight-weighted sample depth") {
  ad::Rng rng(3);
  const int rays = 64, n = 12;
  const SampleSet s = sample_stratified(rays, n, 1.0, 5.0, false, 0.0, true, &rng);
  ad::Array sig(rays, n);
  for (auto& v : sig.data) v = rng.uniform(0.0, 3.0);
  ad::Array rgb(int64_t{rays} * n, 3);
  for (auto& v : rgb.data) v = rng.uniform();
  ad::Tape t;
  const RenderOut out = composite(t, t.constant(sig), t.constant(rgb), s, Vec3{0, 0, 0});
  for (int r = 0; r < rays; ++r) {
    double depth = 0.0, total = 0.0;
    for (int j = 0; j < n; ++j) {
      const double w = t.val(out.weights)[static_cast<size_t>(r) * n + j];
      CHECK(w >= 0.0);
      depth += w * s.z.at(r, j);
      total += w;
    }
    CHECK(t.val(out.depth)[r] == doctest::Approx(depth).epsilon(1e-12));
    CHECK(t.val(out.opacity)[r] == doctest::Approx(total).epsilon(1e-12));
    CHECK(t.val(out.depth_norm)[r] ==
          doctest::Approx(depth / std::max(total, 1e-6)).epsilon(1e-9));
  }
}

TEST_CASE("sample positions advance along unit directions") {
  const SceneSpec spec = scene_by_name("plain-box", 16, 3, 1);
  const Camera cam = spec.train_rig[0];
  const RayBatch rays = generate_rays(cam, {{4, 4}, {8, 12}});
  const SampleSet s = sample_stratified(2, 3, 1.0, 5.0, false, 0.0, false, nullptr);
  ad::Array pos, dirs;
  sample_positions(rays, s, pos, dirs);
  REQUIRE(pos.rows() == 6);
  REQUIRE(dirs.rows() == 6);
  for (int r = 0; r < 2; ++r)
    for (int j = 0; j < 3; ++j) {
      const Vec3 expect = rays.rays[static_cast<size_t>(r)].at(s.z.at(r, j));
      const int64_t row = r * 3 + j;
      CHECK(pos.at(row, 0) == doctest::Approx(expect.x));
      CHECK(pos.at(row, 1) == doctest::Approx(expect.y));
      CHECK(pos.at(row, 2) == doctest::Approx(expect.z));
      CHECK(dirs.at(row, 2) == doctest::Approx(rays.rays[static_cast<size_t>(r)].d.z));
    }
}
