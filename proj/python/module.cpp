#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "simplerf/config.hpp"
#include "simplerf/dataset.hpp"
#include "simplerf/evaluate.hpp"
#include "simplerf/gradcheck.hpp"
#include "simplerf/metrics.hpp"
#include "simplerf/png_io.hpp"
#include "simplerf/scene.hpp"
#include "simplerf/trainer.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace simplerf;

namespace {

RunConfig config_from(const std::string& backend,
                      const std::map<std::string, std::string>& overrides) {
  RunConfig cfg = default_config(backend);
  for (const auto& [k, v] : overrides) apply_override(cfg, k, v);
  cfg.validate();
  return cfg;
}

py::dict py_generate_scene(const std::string& scene, const std::string& out_dir, int n_train,
                           int candidates, int n_test, int image_size, double kp_density,
                           double kp_sigma, uint64_t seed) {
  const SceneSpec spec = scene_by_name(scene, image_size, candidates, n_test);
  const double sigma = kp_sigma < 0.0 ? 0.01 * (spec.far - spec.near) : kp_sigma;
  const SceneBundle bundle = generate_bundle(spec, n_train, kp_density, sigma, seed);
  fs::create_directories(out_dir);
  save_bundle(out_dir, bundle);
  py::dict d;
  d["views"] = bundle.views.size();
  d["train_views"] = bundle.train_ids.size();
  d["test_views"] = bundle.test_ids.size();
  d["keypoints"] = bundle.keypoints.size();
  return d;
}

py::dict py_train(const std::string& data_dir, const std::string& out_dir,
                  const std::string& backend,
                  const std::map<std::string, std::string>& overrides) {
  const RunConfig cfg = config_from(backend, overrides);
  const SceneBundle bundle = load_bundle(data_dir);
  fs::create_directories(out_dir);
  Trainer trainer(cfg, bundle);
  std::ofstream log(fs::path(out_dir) / "train_log.jsonl");
  const auto records = trainer.train(&log);
  const std::string ckpt = (fs::path(out_dir) / "model.ckpt").string();
  trainer.save(ckpt);
  py::dict d;
  d["iterations"] = records.size();
  d["final_total"] = records.empty() ? 0.0 : records.back().total;
  d["checkpoint"] = ckpt;
  return d;
}

py::dict py_render(const std::string& data_dir, const std::string& checkpoint,
                   const std::string& out_dir) {
  const SceneBundle bundle = load_bundle(data_dir);
  Trainer trainer = Trainer::load(checkpoint, bundle);
  fs::create_directories(out_dir);
  RenderAudit total;
  for (int id : bundle.test_ids) {
    RenderAudit a;
    const View v = trainer.render(bundle.views[static_cast<size_t>(id)].cam, &a);
    char name[32];
    std::snprintf(name, sizeof(name), "view_%04d.png", id);
    write_png((fs::path(out_dir) / name).string(), v.image);
    total.queries += a.queries;
    total.param_elements = a.param_elements;
    total.main_only = total.main_only && a.main_only;
    total.touched_params = a.touched_params;
  }
  py::dict d;
  d["views"] = bundle.test_ids.size();
  d["queries"] = total.queries;
  d["param_elements"] = total.param_elements;
  d["flop_proxy"] = total.flop_proxy();
  d["main_only"] = total.main_only;
  d["touched_params"] = total.touched_params;
  return d;
}

std::string py_evaluate(const std::string& data_dir, const std::string& checkpoint) {
  const SceneBundle bundle = load_bundle(data_dir);
  Trainer trainer = Trainer::load(checkpoint, bundle);
  std::vector<View> renders;
  for (int id : bundle.test_ids)
    renders.push_back(trainer.render(bundle.views[static_cast<size_t>(id)].cam));
  return evaluate(renders, bundle, trainer.config().backend).to_json();
}

std::vector<py::dict> py_gradcheck(const std::string& backend, double tol, uint64_t seed) {
  std::vector<py::dict> out;
  std::vector<std::string> backends;
  if (backend == "all")
    backends = {"nerf", "tensorf", "hashgrid"};
  else
    backends = {backend};
  for (const std::string& b : backends)
    for (const GradcheckCase& c : gradcheck_suite(b, tol, seed)) {
      py::dict d;
      d["name"] = c.name;
      d["pass"] = c.report.pass;
      d["max_rel_err"] = c.report.max_rel_err;
      d["coords_checked"] = c.report.coords_checked;
      out.push_back(d);
    }
  return out;
}

double py_psnr(const std::string& a, const std::string& b) {
  return psnr(read_png(a), read_png(b));
}

double py_ssim(const std::string& a, const std::string& b) {
  return ssim(read_png(a), read_png(b));
}

std::string py_default_config(const std::string& backend) {
  return dump_config(default_config(backend));
}

}  // namespace

PYBIND11_MODULE(_simplerf, m) {
  m.doc() = "Sparse-view radiance field lab";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<NumericalError>(m, "NumericalError");

  m.def("generate_scene", &py_generate_scene, py::arg("scene"), py::arg("out_dir"),
        py::arg("n_train") = 3, py::arg("candidates") = 8, py::arg("n_test") = 8,
        py::arg("image_size") = 64, py::arg("kp_density") = 0.25, py::arg("kp_sigma") = -1.0,
        py::arg("seed") = 1,
        "Ray-trace a named procedural scene into a dataset directory");
  m.def("train", &py_train, py::arg("data_dir"), py::arg("out_dir"), py::arg("backend") = "nerf",
        py::arg("overrides") = std::map<std::string, std::string>{},
        "Fit a model; writes train_log.jsonl and model.ckpt");
  m.def("render", &py_render, py::arg("data_dir"), py::arg("checkpoint"), py::arg("out_dir"),
        "Render test views from a checkpoint, with inference cost accounting");
  m.def("evaluate", &py_evaluate, py::arg("data_dir"), py::arg("checkpoint"),
        "Render and score test views; returns the report as a JSON string");
  m.def("gradcheck", &py_gradcheck, py::arg("backend") = "all", py::arg("tol") = 1e-4,
        py::arg("seed") = 24, "Finite-difference check of every loss term");
  m.def("default_config", &py_default_config, py::arg("backend"),
        "Default configuration for a backend, as key = value text");
  m.def("psnr", &py_psnr, py::arg("a"), py::arg("b"), "PSNR between two PNG files");
  m.def("ssim", &py_ssim, py::arg("a"), py::arg("b"), "SSIM between two PNG files");
}
