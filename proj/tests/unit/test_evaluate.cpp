#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "simplerf/evaluate.hpp"

using namespace simplerf;

TEST_CASE("evaluating the ground truth against itself is a perfect score") {
  const SceneBundle bundle =
      generate_bundle(scene_by_name("plain-box", 32, 4, 3), 3, 0.0, 0.0, 21);
  std::vector<View> renders;
  for (int tid : bundle.test_ids) renders.push_back(bundle.views[static_cast<size_t>(tid)]);

  const EvalReport report = evaluate(renders, bundle, "tensorf");
  CHECK(report.scene == "plain-box");
  CHECK(report.backend == "tensorf");
  REQUIRE(report.views.size() == 3);
  for (const ViewMetrics& m : report.views) {
    CHECK(std::isinf(m.psnr_full));
    CHECK(m.ssim_full == doctest::Approx(1.0));
    CHECK(m.depth_mae_full == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m.srocc_full == doctest::Approx(1.0));
    CHECK(m.visible_frac > 0.0);
    CHECK(m.visible_frac <= 1.0);
    if (m.visible_frac > 0.0) {
      CHECK(m.depth_mae_masked == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(std::isinf(m.psnr_masked));
    }
  }
  CHECK(report.scene_complexity > 0.0);
  CHECK(std::isinf(report.mean.psnr_full));
  CHECK(report.mean.ssim_full == doctest::Approx(1.0));
}

TEST_CASE("a report survives the json round trip") {
  const SceneBundle bundle =
      generate_bundle(scene_by_name("plain-box", 24, 3, 2), 3, 0.0, 0.0, 22);
  std::vector<View> renders;
  for (int tid : bundle.test_ids) renders.push_back(bundle.views[static_cast<size_t>(tid)]);
  const EvalReport report = evaluate(renders, bundle, "nerf");

  const std::string json = report.to_json();
  const EvalReport back = eval_report_from_json(json);
  CHECK(back.to_json() == json);
  CHECK(back.scene == report.scene);
  CHECK(back.views.size() == report.views.size());
  CHECK(std::isinf(back.views[0].psnr_full));

  const std::string md = report.to_markdown();
  CHECK(md.find("plain-box") != std::string::npos);
  CHECK(md.find("| view |") != std::string::npos);
  CHECK(md.find("mean") != std::string::npos);
}

TEST_CASE("malformed report json is rejected") {
  CHECK_THROWS_AS(eval_report_from_json("{"), std::invalid_argument);
  CHECK_THROWS_AS(eval_report_from_json("{\"scene\": 3}"), std::invalid_argument);
  CHECK_THROWS_AS(eval_report_from_json("[]"), std::invalid_argument);
}

TEST_CASE("mismatched render and test counts are rejected") {
  const SceneBundle bundle =
      generate_bundle(scene_by_name("plain-box", 24, 3, 2), 3, 0.0, 0.0, 23);
  const std::vector<View> renders(1, bundle.views[static_cast<size_t>(bundle.test_ids[0])]);
  CHECK_THROWS_AS(evaluate(renders, bundle, "nerf"), std::invalid_argument);
}
