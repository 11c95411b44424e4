#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "simplerf/config.hpp"
#include "simplerf/dataset.hpp"
#include "simplerf/scene.hpp"

using namespace simplerf;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("simplerf_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("backend profiles differ where the models differ") {
  const RunConfig nerf = default_config("nerf");
  const RunConfig tensorf = default_config("tensorf");
  const RunConfig hashgrid = default_config("hashgrid");
  CHECK(nerf.backend == "nerf");
  CHECK(tensorf.backend == "tensorf");
  CHECK(hashgrid.backend == "hashgrid");
  CHECK(nerf.lambda_cfc > 0.0);
  CHECK(tensorf.lambda_mc > 0.0);
  CHECK(tensorf.lambda_tv > 0.0);
  CHECK_THROWS_AS(default_config("pointcloud"), ConfigError);
  nerf.validate();
  tensorf.validate();
  hashgrid.validate();
}

TEST_CASE("overrides parse typed values and reject junk") {
  RunConfig cfg = default_config("nerf");
  apply_override(cfg, "iterations", "123");
  CHECK(cfg.iterations == 123);
  apply_override(cfg, "jitter", "false");
  CHECK_FALSE(cfg.jitter);
  apply_override(cfg, "lr0", "2.5e-3");
  CHECK(cfg.lr0 == doctest::Approx(2.5e-3));
  apply_override(cfg, "seed", "99");
  CHECK(cfg.seed == 99);
  CHECK_THROWS_AS(apply_override(cfg, "warp_field", "1"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "iterations", "soon"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "jitter", "2"), ConfigError);
}

TEST_CASE("dumping and re-parsing a config is the identity") {
  RunConfig cfg = default_config("tensorf");
  apply_override(cfg, "iterations", "777");
  apply_override(cfg, "tensorf_upsample_milestones", "0.1,0.4");
  const std::string dump = dump_config(cfg);

  RunConfig reparsed = default_config("nerf");
  apply_config_text(reparsed, dump);
  CHECK(dump_config(reparsed) == dump);
  CHECK(reparsed.iterations == 777);
  CHECK(reparsed.upsample_fractions() == std::vector<double>{0.1, 0.4});
}

TEST_CASE("config text supports comments and later-line override") {
  RunConfig cfg = default_config("nerf");
  apply_config_text(cfg, "# comment\niterations = 10\n\niterations = 20\n");
  CHECK(cfg.iterations == 20);
  CHECK_THROWS_AS(apply_config_text(cfg, "iterations\n"), ConfigError);
}

TEST_CASE("validation rejects out-of-range settings") {
  RunConfig cfg = default_config("nerf");
  cfg.patch_k = 4;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = default_config("nerf");
  cfg.activation_frac = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = default_config("nerf");
  cfg.lr0 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = default_config("nerf");
  cfg.lambda_sd = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = default_config("tensorf");
  apply_override(cfg, "tensorf_upsample_milestones", "0.2,1.4");
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = default_config("hashgrid");
  cfg.hash_aug_s_near = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("a bundle survives the disk round trip") {
  const SceneBundle original =
      generate_bundle(scene_by_name("plain-box", 24, 4, 2), 3, 0.25, 0.02, 13);
  const auto dir = temp_dir("roundtrip");
  save_bundle(dir.string(), original);
  const SceneBundle loaded = load_bundle(dir.string());

  CHECK(loaded.scene_name == original.scene_name);
  CHECK(loaded.train_ids == original.train_ids);
  CHECK(loaded.test_ids == original.test_ids);
  CHECK(loaded.near == original.near);
  CHECK(loaded.far == original.far);
  CHECK(loaded.bbox.hi.x == original.bbox.hi.x);

  REQUIRE(loaded.views.size() == original.views.size());
  for (size_t v = 0; v < loaded.views.size(); ++v) {
    CHECK(loaded.views[v].image.data == original.views[v].image.data);
    REQUIRE(loaded.views[v].depth.z.size() == original.views[v].depth.z.size());
    for (size_t i = 0; i < loaded.views[v].depth.z.size(); ++i) {
      const double d = original.views[v].depth.z[i];
      CHECK(loaded.views[v].depth.z[i] == static_cast<double>(static_cast<float>(d)));
    }
    CHECK(loaded.views[v].cam.fx == original.views[v].cam.fx);
    for (int k = 0; k < 16; ++k)
      CHECK(loaded.views[v].cam.pose.m[static_cast<size_t>(k)] ==
            original.views[v].cam.pose.m[static_cast<size_t>(k)]);
  }

  REQUIRE(loaded.keypoints.size() == original.keypoints.size());
  for (size_t i = 0; i < loaded.keypoints.size(); ++i) {
    CHECK(loaded.keypoints[i].view == original.keypoints[i].view);
    CHECK(loaded.keypoints[i].pixel.row == original.keypoints[i].pixel.row);
    CHECK(loaded.keypoints[i].depth == original.keypoints[i].depth);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("loading a directory without a manifest fails loudly") {
  const auto dir = temp_dir("empty");
  CHECK_THROWS_AS(load_bundle(dir.string()), std::runtime_error);
  std::filesystem::remove_all(dir);
}
