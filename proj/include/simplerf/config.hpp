#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace simplerf {

// Invalid configuration input; the CLI maps this to its config-error exit.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value training configuration. Defaults here are the NeRF profile;
// default_config() re-seats the backend-dependent entries.
struct RunConfig {
  std::string backend = "nerf";  // nerf | tensorf | hashgrid
  uint64_t seed = 1;
  int iterations = 5000;
  int rays_per_batch = 512;
  int sd_rays_per_batch = 64;  // keypoint rays appended to each batch
  int log_every = 1;

  // sampling
  int n_coarse = 32;
  int n_fine = 32;
  int n_samples = 64;  // grid backends
  bool sample_disparity = false;
  bool jitter = true;
  double eps_pdf = 1e-5;

  // augmentation toggles
  bool augmentations = true;
  bool use_reliability_masks = true;  // off: every depth supervises

  // nerf
  int nerf_trunk_layers = 4;
  int nerf_trunk_width = 64;
  int nerf_head_width = 32;
  int pe_position = 10;
  int pe_view = 4;
  int pe_position_smooth = 3;
  double nerf_sigma_shift = 0.0;

  // tensorf
  int tensorf_rank_sigma = 24;
  int tensorf_rank_color = 72;
  int tensorf_features = 27;
  int tensorf_res = 128;        // per-axis target after upsampling
  int tensorf_start_res = 32;   // per-axis at init
  int tensorf_decoder_width = 32;
  int tensorf_pe_view = 0;
  std::string tensorf_density_activation = "softplus";  // softplus | sigmoid-cap
  double tensorf_density_shift = -3.0;
  std::string tensorf_upsample_milestones = "0.2,0.35,0.5";  // fractions of iterations
  double tensorf_aug_z_raise = 0.25;

  // hashgrid
  int hash_levels = 8;
  int hash_features = 2;
  int hash_base_res = 16;
  double hash_growth = 1.38;
  int hash_log2_table = 14;
  int hash_aug_log2_div = 10;
  int hash_aug_min_log2 = 4;
  double hash_aug_s_near = 0.3;
  int hash_density_width = 32;
  int hash_density_out = 16;
  int hash_head_width = 32;
  double hash_sigma_shift = -1.0;

  // losses
  double lambda_main = 1.0;
  double lambda_aug_photo = 1.0;
  double lambda_sd = 0.1;
  double lambda_aug = 0.1;
  double lambda_cfc = 0.1;
  double lambda_mc = 0.0;
  double lambda_tv = 0.0;
  int patch_k = 5;
  double e_tau = 0.1;
  int mass_groups = 5;
  double activation_frac = 0.2;

  // optimizer
  double lr0 = 5e-4;
  double lr1 = 5e-6;
  double lr0_decoder = 1e-3;  // tensorf MLP group
  double lr1_decoder = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  std::vector<double> upsample_fractions() const;
  void validate() const;  // throws ConfigError
};

RunConfig default_config(const std::string& backend);

// Sets one field from its config key; throws ConfigError on unknown keys or
// unparsable values.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

// `key = value` lines, '#' comments. Later lines win.
RunConfig load_config_file(const std::string& path, RunConfig base);
void apply_config_text(RunConfig& cfg, const std::string& text);

// Full dump in declaration order; parse-dump round-trips.
std::string dump_config(const RunConfig& cfg);

}  // namespace simplerf
