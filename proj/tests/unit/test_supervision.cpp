#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "simplerf/metrics.hpp"
#include "simplerf/supervision.hpp"

using namespace simplerf;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PairVars {
  ad::Var z_m, z_a;
};

PairVars depth_pair(ad::Tape& t, ad::ParamStore& store, const std::vector<double>& zm,
                    const std::vector<double>& za) {
  ad::Array am(static_cast<int64_t>(zm.size()), 1), aa(static_cast<int64_t>(za.size()), 1);
  std::copy(zm.begin(), zm.end(), am.data.begin());
  std::copy(za.begin(), za.end(), aa.data.begin());
  return {t.param(store.create("zm", std::move(am))), t.param(store.create("za", std::move(aa)))};
}

}  // namespace

TEST_CASE("the reliability gate lets the smaller error supervise, within the threshold") {
  const double tau = 0.1;
  MaskPair p = mask_pair(0.05, 0.08, tau);
  CHECK(p.m_a == 1);
  CHECK(p.m_m == 0);

  p = mask_pair(0.07, 0.07, tau);
  CHECK(p.m_a == 1);
  CHECK(p.m_m == 1);

  p = mask_pair(0.05, 0.15, tau);
  CHECK(p.m_a == 1);
  CHECK(p.m_m == 0);

  p = mask_pair(0.15, 0.12, tau);
  CHECK(p.m_a == 0);
  CHECK(p.m_m == 0);

  p = mask_pair(kInf, 0.02, tau);
  CHECK(p.m_a == 0);
  CHECK(p.m_m == 1);

  p = mask_pair(kInf, kInf, tau);
  CHECK(p.m_a == 0);
  CHECK(p.m_m == 0);
}

TEST_CASE("reprojection prefers the true depth over a corrupted one") {
  const SceneSpec spec = scene_by_name("plain-box", 32, 3, 1);
  const SceneBundle bundle = generate_bundle(spec, 3, 0.0, 0.0, 7);
  const View& src = bundle.views[0];
  const View& dst = bundle.views[1];

  std::vector<Pixel> pixels;
  std::vector<double> z_true, z_bad;
  for (int r = 8; r < 24 && pixels.size() < 40; r += 2)
    for (int c = 8; c < 24 && pixels.size() < 40; c += 2) {
      const double d = src.depth.at(r, c);
      if (!std::isfinite(d)) continue;
      pixels.push_back({r, c});
      z_true.push_back(d);
      z_bad.push_back(0.5 * d);
    }
  REQUIRE(pixels.size() > 10);

  const ReliabilityMasks masks =
      reliability_masks(pixels, z_true, z_bad, src.cam, src.image, dst.cam, dst.image, 5, 0.1);
  int good_wins = 0, bad_wins = 0;
  for (size_t i = 0; i < pixels.size(); ++i) {
    CHECK(masks.e_a[i] >= 0.0);
    if (masks.m_a[i] && !masks.m_m[i]) ++good_wins;
    if (masks.m_m[i] && !masks.m_a[i]) ++bad_wins;
  }
  CHECK(good_wins > static_cast<int>(pixels.size()) / 2);
  CHECK(good_wins > bad_wins);
}

TEST_CASE("invalid depths never earn supervision rights") {
  const SceneSpec spec = scene_by_name("plain-box", 32, 3, 1);
  const SceneBundle bundle = generate_bundle(spec, 3, 0.0, 0.0, 7);
  const View& src = bundle.views[0];
  const View& dst = bundle.views[1];
  const std::vector<Pixel> pixels = {{16, 16}};
  const ReliabilityMasks masks = reliability_masks(pixels, {-1.0}, {kInf}, src.cam, src.image,
                                                   dst.cam, dst.image, 5, 0.1);
  CHECK(masks.e_a[0] == kInf);
  CHECK(masks.e_m[0] == kInf);
  CHECK(masks.m_a[0] == 0);
  CHECK(masks.m_m[0] == 0);
}

TEST_CASE("masked depth consistency pulls each side toward the other only where allowed") {
  ReliabilityMasks masks;
  masks.m_a = {1, 0, 1};
  masks.m_m = {0, 1, 1};
  const std::vector<double> zm = {2.0, 3.0, 4.0};
  const std::vector<double> za = {2.5, 2.0, 4.3};

  ad::ParamStore store;
  ad::Tape t;
  const PairVars v = depth_pair(t, store, zm, za);
  const ad::Var loss = loss_augmented_depth(t, v.z_m, v.z_a, masks);

  double expect = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = zm[static_cast<size_t>(i)] - za[static_cast<size_t>(i)];
    expect += (masks.m_a[static_cast<size_t>(i)] + masks.m_m[static_cast<size_t>(i)]) * d * d;
  }
  expect /= 3.0;
  CHECK(t.scalar(loss) == doctest::Approx(expect));

  t.backward(loss);
  const auto& gm = store.at("zm").grad;
  const auto& ga = store.at("za").grad;
  for (int i = 0; i < 3; ++i) {
    const double d = zm[static_cast<size_t>(i)] - za[static_cast<size_t>(i)];
    CHECK(gm[static_cast<size_t>(i)] ==
          doctest::Approx(2.0 / 3.0 * masks.m_a[static_cast<size_t>(i)] * d));
    CHECK(ga[static_cast<size_t>(i)] ==
          doctest::Approx(-2.0 / 3.0 * masks.m_m[static_cast<size_t>(i)] * d));
  }
}

TEST_CASE("coarse/fine consistency uses the same gate structure") {
  ReliabilityMasks masks;
  masks.m_a = {1, 0};
  masks.m_m = {0, 1};
  ad::ParamStore store;
  ad::Tape t;
  const PairVars v = depth_pair(t, store, {1.0, 2.0}, {1.4, 1.5});
  const ad::Var loss = loss_coarse_fine(t, v.z_m, v.z_a, masks);
  CHECK(t.scalar(loss) == doctest::Approx(0.5 * (0.16 + 0.25)));
  t.backward(loss);
  CHECK(store.at("zm").grad[0] == doctest::Approx(2.0 / 2.0 * (1.0 - 1.4)));
  CHECK(store.at("zm").grad[1] == doctest::Approx(0.0));
  CHECK(store.at("za").grad[0] == doctest::Approx(0.0));
  CHECK(store.at("za").grad[1] == doctest::Approx(-2.0 / 2.0 * (2.0 - 1.5)));
}

TEST_CASE("keypoint depth losses are plain squared error means") {
  ad::ParamStore store;
  ad::Tape t;
  const PairVars v = depth_pair(t, store, {1.0, 3.0}, {2.0, 2.0});
  const ad::Array target = ad::Array::from({1.5, 2.5});
  CHECK(t.scalar(loss_depth_to(t, v.z_m, target)) == doctest::Approx(0.25));
  CHECK(t.scalar(loss_sparse_depth(t, v.z_m, v.z_a, target)) == doctest::Approx(0.5));
}

TEST_CASE("mass concentration entropy spans ln(groups) down to zero") {
  ad::Tape t;
  ad::Array uniform(1, 10);
  std::fill(uniform.data.begin(), uniform.data.end(), 0.07);
  CHECK(t.scalar(loss_mass_concentration(t, t.constant(uniform), 5)) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-9));

  ad::Array peaked(1, 10);
  peaked.at(0, 0) = 0.4;
  peaked.at(0, 1) = 0.6;
  CHECK(t.scalar(loss_mass_concentration(t, t.constant(peaked), 5)) ==
        doctest::Approx(0.0).epsilon(1e-9));

  ad::Array tail(1, 7);
  tail.at(0, 6) = 1.0;  // groups of 2,2,3: all mass in the absorbing last group
  CHECK(t.scalar(loss_mass_concentration(t, t.constant(tail), 3)) ==
        doctest::Approx(0.0).epsilon(1e-9));

  ad::Array scaled = uniform;
  for (auto& w : scaled.data) w *= 3.0;
  CHECK(t.scalar(loss_mass_concentration(t, t.constant(scaled), 5)) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-9));
}
