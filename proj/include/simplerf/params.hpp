#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "simplerf/tape.hpp"

namespace simplerf::ad {

// First-order moments live here, keyed by parameter name, so grids can be
// resized between steps by dropping the stale entry.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Parameters whose name starts with a group prefix use the group rate
  // instead of the base rate. First matching prefix wins.
  std::vector<std::pair<std::string, double>> lr_groups;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> moments;

  double rate_for(const std::string& name) const;
  void set_group(const std::string& prefix, double rate);
  void drop(const std::string& name) { moments.erase(name); }
};

// One optimizer step over every slot in the store; zeroes gradients and
// advances store.step_count. Bias correction uses the post-increment count.
void adam_step(ParamStore& store, AdamState& state);

// Geometric interpolation from lr0 to lr1 across max(total,1) steps.
double exp_decay_lr(double lr0, double lr1, uint64_t step, uint64_t total);

struct GradcheckReport {
  double max_rel_err = 0.0;
  bool pass = false;
  std::string worst_param;
  int64_t worst_index = -1;
  int64_t coords_checked = 0;
};

struct GradcheckOptions {
  double h = 1e-5;
  // Coordinates sampled per parameter array; arrays at most this large are
  // checked exhaustively.
  int max_coords_per_param = 32;
  uint64_t seed = 7;
};

// `loss_fn(true)` must rebuild the graph from current store values and run
// backward; `loss_fn(false)` only evaluates. Central differences, float64.
GradcheckReport gradcheck(const std::function<double(bool)>& loss_fn, ParamStore& store, double tol,
                          const GradcheckOptions& opts = {});

}  // namespace simplerf::ad
