#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "simplerf/config.hpp"
#include "simplerf/dataset.hpp"
#include "simplerf/evaluate.hpp"
#include "simplerf/gradcheck.hpp"
#include "simplerf/png_io.hpp"
#include "simplerf/scene.hpp"
#include "simplerf/trainer.hpp"

namespace fs = std::filesystem;
using namespace simplerf;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void write_depth_f32(const std::string& path, const DepthMap& depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (double v : depth.z) {
    const float f = static_cast<float>(v);
    out.write(reinterpret_cast<const char*>(&f), sizeof(f));
  }
}

// The backend decides the defaults, so resolve it first from the same file
// and overrides, then apply them on top of that backend's baseline.
RunConfig resolve_config(const std::string& config_path, const std::vector<std::string>& sets) {
  auto apply = [&](RunConfig& cfg) {
    if (!config_path.empty()) cfg = load_config_file(config_path, cfg);
    for (const std::string& kv : sets) {
      const size_t eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
  };
  RunConfig probe = default_config("nerf");
  apply(probe);
  RunConfig cfg = default_config(probe.backend);
  apply(cfg);
  cfg.validate();
  return cfg;
}

std::vector<int> view_selection(const SceneBundle& bundle, const std::string& which) {
  if (which == "test") return bundle.test_ids;
  if (which == "train") return bundle.train_ids;
  if (which == "all") {
    std::vector<int> ids(bundle.views.size());
    for (size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    return ids;
  }
  throw ConfigError("--views must be test, train, or all");
}

std::string view_name(const char* stem, int id, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d.%s", stem, id, ext);
  return buf;
}

int cmd_generate_scene(const std::string& scene, const std::string& out, int n_train,
                       int candidates, int n_test, int image_size, double kp_density,
                       double kp_sigma, uint64_t seed) {
  const SceneSpec spec = scene_by_name(scene, image_size, candidates, n_test);
  const double sigma = kp_sigma < 0.0 ? 0.01 * (spec.far - spec.near) : kp_sigma;
  const SceneBundle bundle = generate_bundle(spec, n_train, kp_density, sigma, seed);
  fs::create_directories(out);
  save_bundle(out, bundle);
  std::cout << "wrote " << bundle.views.size() << " views (" << bundle.train_ids.size()
            << " train), " << bundle.keypoints.size() << " keypoints to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& data, const std::string& out, const std::string& config_path,
              const std::vector<std::string>& sets, bool print_config) {
  const RunConfig cfg = resolve_config(config_path, sets);
  if (print_config) {
    std::cout << dump_config(cfg);
    return 0;
  }
  if (data.empty()) throw ConfigError("train requires --data");
  if (out.empty()) throw ConfigError("train requires --out");

  const SceneBundle bundle = load_bundle(data);
  fs::create_directories(out);
  Trainer trainer(cfg, bundle);

  std::ofstream log(fs::path(out) / "train_log.jsonl");
  if (!log) throw std::runtime_error("cannot write train log in " + out);
  const auto records = trainer.train(&log);
  trainer.save((fs::path(out) / "model.ckpt").string());
  write_file((fs::path(out) / "config.txt").string(), dump_config(cfg));
  if (!records.empty()) {
    const LossBreakdown& last = records.back();
    std::cout << "finished " << records.size() << " iterations, final total loss " << last.total
              << "\n";
  }
  std::cout << "checkpoint: " << (fs::path(out) / "model.ckpt").string() << "\n";
  return 0;
}

int cmd_render(const std::string& data, const std::string& checkpoint, const std::string& out,
               const std::string& which, bool audit) {
  const SceneBundle bundle = load_bundle(data);
  Trainer trainer = Trainer::load(checkpoint, bundle);
  const std::vector<int> ids = view_selection(bundle, which);
  fs::create_directories(out);

  RenderAudit total;
  for (size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    RenderAudit a;
    const View v = trainer.render(bundle.views[static_cast<size_t>(id)].cam, audit ? &a : nullptr);
    write_png((fs::path(out) / view_name("view", id, "png")).string(), v.image);
    write_depth_f32((fs::path(out) / view_name("depth", id, "f32")).string(), v.depth);
    if (audit) {
      total.queries += a.queries;
      total.param_elements = a.param_elements;
      total.touched_params = a.touched_params;
      total.main_only = total.main_only && a.main_only;
    }
  }
  if (audit) {
    std::ostringstream js;
    js << "{\n  \"queries\": " << total.queries
       << ",\n  \"param_elements\": " << total.param_elements
       << ",\n  \"flop_proxy\": " << total.flop_proxy()
       << ",\n  \"main_only\": " << (total.main_only ? "true" : "false")
       << ",\n  \"touched_params\": [";
    for (size_t i = 0; i < total.touched_params.size(); ++i)
      js << (i ? ", " : "") << '"' << total.touched_params[i] << '"';
    js << "]\n}\n";
    write_file((fs::path(out) / "audit.json").string(), js.str());
  }
  std::cout << "rendered " << ids.size() << " views to " << out << "\n";
  return 0;
}

int cmd_evaluate(const std::string& data, const std::string& checkpoint, const std::string& out) {
  const SceneBundle bundle = load_bundle(data);
  Trainer trainer = Trainer::load(checkpoint, bundle);
  std::vector<View> renders;
  renders.reserve(bundle.test_ids.size());
  for (int id : bundle.test_ids)
    renders.push_back(trainer.render(bundle.views[static_cast<size_t>(id)].cam));
  const EvalReport rep = evaluate(renders, bundle, trainer.config().backend);
  fs::create_directories(out);
  write_file((fs::path(out) / "report.json").string(), rep.to_json());
  write_file((fs::path(out) / "report.md").string(), rep.to_markdown());
  std::cout << rep.to_markdown();
  return 0;
}

int cmd_gradcheck(const std::string& backend, double tol, uint64_t seed) {
  std::vector<std::string> backends;
  if (backend == "all")
    backends = {"nerf", "tensorf", "hashgrid"};
  else
    backends = {backend};

  bool ok = true;
  for (const std::string& b : backends) {
    for (const GradcheckCase& c : gradcheck_suite(b, tol, seed)) {
      std::printf("%-28s %s  max_rel_err=%.3e  coords=%lld\n", c.name.c_str(),
                  c.report.pass ? "pass" : "FAIL", c.report.max_rel_err,
                  static_cast<long long>(c.report.coords_checked));
      ok = ok && c.report.pass;
    }
  }
  if (!ok) {
    std::cerr << "gradient check failed\n";
    return kExitNumerical;
  }
  return 0;
}

int cmd_report(const std::string& in, const std::string& out) {
  const EvalReport rep = eval_report_from_json(read_file(in));
  const std::string md = rep.to_markdown();
  if (out.empty())
    std::cout << md;
  else
    write_file(out, md);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-view radiance field lab"};
  app.require_subcommand(1);

  std::string scene = "plain-box", out, data, config_path, checkpoint, which = "test";
  std::string backend = "all", report_in, report_out;
  std::vector<std::string> sets;
  int n_train = 3, candidates = 8, n_test = 8, image_size = 64;
  double kp_density = 0.25, kp_sigma = -1.0, tol = 1e-4;
  uint64_t seed = 1, gc_seed = 24;
  bool print_config = false, audit = false;

  CLI::App* gen = app.add_subcommand("generate-scene", "Ray-trace a procedural scene to a dataset");
  gen->add_option("--scene", scene, "plain-box, floater-bait, shiny, or near-cam-trap");
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--n-train", n_train, "training views to keep");
  gen->add_option("--candidates", candidates, "training rig positions to choose from");
  gen->add_option("--n-test", n_test, "held-out views");
  gen->add_option("--image-size", image_size, "square image resolution");
  gen->add_option("--kp-density", kp_density, "keypoints as a fraction of detected edge pixels");
  gen->add_option("--kp-sigma", kp_sigma, "keypoint depth noise; default 1% of the depth range");
  gen->add_option("--seed", seed, "rng seed");

  CLI::App* train = app.add_subcommand("train", "Fit a model to a dataset");
  train->add_option("--data", data, "dataset directory");
  train->add_option("--out", out, "run directory for log and checkpoint");
  train->add_option("--config", config_path, "config file (key = value lines)");
  train->add_option("--set", sets, "override, e.g. --set backend=tensorf")->take_all();
  train->add_flag("--print-config", print_config, "print the resolved config and exit");

  CLI::App* render = app.add_subcommand("render", "Render views from a checkpoint");
  render->add_option("--data", data, "dataset directory")->required();
  render->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  render->add_option("--out", out, "output directory")->required();
  render->add_option("--views", which, "test, train, or all");
  render->add_flag("--audit", audit, "write inference cost accounting to audit.json");

  CLI::App* eval = app.add_subcommand("evaluate", "Render test views and score them");
  eval->add_option("--data", data, "dataset directory")->required();
  eval->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  eval->add_option("--out", out, "output directory for report.json / report.md")->required();

  CLI::App* gc = app.add_subcommand("gradcheck", "Check loss gradients against finite differences");
  gc->add_option("--backend", backend, "nerf, tensorf, hashgrid, or all");
  gc->add_option("--tol", tol, "max relative error");
  gc->add_option("--seed", gc_seed, "rng seed");

  CLI::App* report = app.add_subcommand("report", "Convert an evaluation report to Markdown");
  report->add_option("--in", report_in, "report.json path")->required();
  report->add_option("--out", report_out, "output .md path; stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen->parsed())
      return cmd_generate_scene(scene, out, n_train, candidates, n_test, image_size, kp_density,
                                kp_sigma, seed);
    if (train->parsed()) return cmd_train(data, out, config_path, sets, print_config);
    if (render->parsed()) return cmd_render(data, checkpoint, out, which, audit);
    if (eval->parsed()) return cmd_evaluate(data, checkpoint, out);
    if (gc->parsed()) return cmd_gradcheck(backend, tol, gc_seed);
    if (report->parsed()) return cmd_report(report_in, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
