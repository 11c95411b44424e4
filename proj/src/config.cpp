#include "simplerf/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace simplerf {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw ConfigError("trailing junk");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as number");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long n = std::stol(v, &pos);
    if (pos != v.size()) throw ConfigError("trailing junk");
    return static_cast<int>(n);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as integer");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const unsigned long long n = std::stoull(v, &pos);
    if (pos != v.size()) throw ConfigError("trailing junk");
    return n;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as integer");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

struct Field {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define STR_FIELD(name) \
  {#name, [](const RunConfig& c) { return c.name; }, \
   [](RunConfig& c, const std::string& v) { c.name = v; }}
#define INT_FIELD(name) \
  {#name, [](const RunConfig& c) { return std::to_string(c.name); }, \
   [](RunConfig& c, const std::string& v) { c.name = parse_int(#name, v); }}
#define U64_FIELD(name) \
  {#name, [](const RunConfig& c) { return std::to_string(c.name); }, \
   [](RunConfig& c, const std::string& v) { c.name = parse_u64(#name, v); }}
#define DBL_FIELD(name) \
  {#name, [](const RunConfig& c) { return format_double(c.name); }, \
   [](RunConfig& c, const std::string& v) { c.name = parse_double(#name, v); }}
#define BOOL_FIELD(name) \
  {#name, [](const RunConfig& c) { return std::string(c.name ? "true" : "false"); }, \
   [](RunConfig& c, const std::string& v) { c.name = parse_bool(#name, v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      STR_FIELD(backend),
      U64_FIELD(seed),
      INT_FIELD(iterations),
      INT_FIELD(rays_per_batch),
      INT_FIELD(sd_rays_per_batch),
      INT_FIELD(log_every),
      INT_FIELD(n_coarse),
      INT_FIELD(n_fine),
      INT_FIELD(n_samples),
      BOOL_FIELD(sample_disparity),
      BOOL_FIELD(jitter),
      DBL_FIELD(eps_pdf),
      BOOL_FIELD(augmentations),
      BOOL_FIELD(use_reliability_masks),
      INT_FIELD(nerf_trunk_layers),
      INT_FIELD(nerf_trunk_width),
      INT_FIELD(nerf_head_width),
      INT_FIELD(pe_position),
      INT_FIELD(pe_view),
      INT_FIELD(pe_position_smooth),
      DBL_FIELD(nerf_sigma_shift),
      INT_FIELD(tensorf_rank_sigma),
      INT_FIELD(tensorf_rank_color),
      INT_FIELD(tensorf_features),
      INT_FIELD(tensorf_res),
      INT_FIELD(tensorf_start_res),
      INT_FIELD(tensorf_decoder_width),
      INT_FIELD(tensorf_pe_view),
      STR_FIELD(tensorf_density_activation),
      DBL_FIELD(tensorf_density_shift),
      STR_FIELD(tensorf_upsample_milestones),
      DBL_FIELD(tensorf_aug_z_raise),
      INT_FIELD(hash_levels),
      INT_FIELD(hash_features),
      INT_FIELD(hash_base_res),
      DBL_FIELD(hash_growth),
      INT_FIELD(hash_log2_table),
      INT_FIELD(hash_aug_log2_div),
      INT_FIELD(hash_aug_min_log2),
      DBL_FIELD(hash_aug_s_near),
      INT_FIELD(hash_density_width),
      INT_FIELD(hash_density_out),
      INT_FIELD(hash_head_width),
      DBL_FIELD(hash_sigma_shift),
      DBL_FIELD(lambda_main),
      DBL_FIELD(lambda_aug_photo),
      DBL_FIELD(lambda_sd),
      DBL_FIELD(lambda_aug),
      DBL_FIELD(lambda_cfc),
      DBL_FIELD(lambda_mc),
      DBL_FIELD(lambda_tv),
      INT_FIELD(patch_k),
      DBL_FIELD(e_tau),
      INT_FIELD(mass_groups),
      DBL_FIELD(activation_frac),
      DBL_FIELD(lr0),
      DBL_FIELD(lr1),
      DBL_FIELD(lr0_decoder),
      DBL_FIELD(lr1_decoder),
      DBL_FIELD(adam_beta1),
      DBL_FIELD(adam_beta2),
      DBL_FIELD(adam_eps),
  };
  return f;
}

#undef STR_FIELD
#undef INT_FIELD
#undef U64_FIELD
#undef DBL_FIELD
#undef BOOL_FIELD

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::vector<double> RunConfig::upsample_fractions() const {
  std::vector<double> out;
  std::stringstream ss(tensorf_upsample_milestones);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_double("tensorf_upsample_milestones", item));
  }
  for (double f : out)
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("upsample milestones must lie in (0,1)");
  return out;
}

void RunConfig::validate() const {
  if (backend != "nerf" && backend != "tensorf" && backend != "hashgrid")
    throw ConfigError("unknown backend '" + backend + "'");
  if (iterations <= 0) throw ConfigError("iterations must be positive");
  if (rays_per_batch <= 0) throw ConfigError("rays_per_batch must be positive");
  if (sd_rays_per_batch < 0) throw ConfigError("sd_rays_per_batch must be nonnegative");
  if (n_coarse <= 0 || n_fine < 0 || n_samples <= 0) throw ConfigError("sample counts invalid");
  if (patch_k <= 0 || patch_k % 2 == 0) throw ConfigError("patch_k must be odd and positive");
  if (mass_groups <= 0) throw ConfigError("mass_groups must be positive");
  if (!(activation_frac >= 0.0 && activation_frac <= 1.0))
    throw ConfigError("activation_frac must lie in [0,1]");
  if (!(hash_aug_s_near >= 0.0 && hash_aug_s_near < 1.0))
    throw ConfigError("hash_aug_s_near must lie in [0,1)");
  if (tensorf_density_activation != "softplus" && tensorf_density_activation != "sigmoid-cap")
    throw ConfigError("tensorf_density_activation must be softplus or sigmoid-cap");
  for (double l : {lambda_main, lambda_aug_photo, lambda_sd, lambda_aug, lambda_cfc, lambda_mc,
                   lambda_tv}) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("loss weights must be finite and >= 0");
  }
  if (!(lr0 > 0.0 && lr1 > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(e_tau > 0.0)) throw ConfigError("e_tau must be positive");
  upsample_fractions();
}

RunConfig default_config(const std::string& backend) {
  RunConfig cfg;
  cfg.backend = backend;
  if (backend == "nerf") {
    // declaration defaults
  } else if (backend == "tensorf") {
    cfg.e_tau = 0.1;
    cfg.lambda_sd = 0.1;
    cfg.lambda_aug = 0.1;
    cfg.lambda_cfc = 0.0;
    cfg.lambda_mc = 0.01;
    cfg.lambda_tv = 0.01;
    cfg.lr0 = 2e-2;
    cfg.lr1 = 2e-3;
    cfg.lr0_decoder = 1e-3;
    cfg.lr1_decoder = 1e-4;
  } else if (backend == "hashgrid") {
    cfg.e_tau = 0.2;
    cfg.lambda_sd = 0.0;
    cfg.lambda_aug = 10.0;
    cfg.lambda_cfc = 0.0;
    cfg.lambda_mc = 0.0;
    cfg.lr0 = 1e-2;
    cfg.lr1 = 1e-3;
  } else {
    throw ConfigError("unknown backend '" + backend + "'");
  }
  return cfg;
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(base, buf.str());
  return base;
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += "\n";
  }
  return out;
}

}  // namespace simplerf
