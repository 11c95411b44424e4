#include "simplerf/params.hpp"

#include <algorithm>
#include <cmath>

namespace simplerf::ad {

double AdamState::rate_for(const std::string& name) const {
  for (const auto& [prefix, rate] : lr_groups)
    if (name.rfind(prefix, 0) == 0) return rate;
  return lr;
}

void AdamState::set_group(const std::string& prefix, double rate) {
  for (auto& g : lr_groups)
    if (g.first == prefix) {
      g.second = rate;
      return;
    }
  lr_groups.emplace_back(prefix, rate);
}

void adam_step(ParamStore& store, AdamState& state) {
  store.step_count += 1;
  const double t = static_cast<double>(store.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (const std::string& name : store.names()) {
    ParamSlot& slot = store.at(name);
    auto& [m, v] = state.moments[name];
    if (m.size() != slot.value.data.size()) {
      m.assign(slot.value.data.size(), 0.0);
      v.assign(slot.value.data.size(), 0.0);
    }
    const double rate = state.rate_for(name);
    for (size_t i = 0; i < slot.value.data.size(); ++i) {
      const double g = slot.grad.data[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      slot.value.data[i] -= rate * mhat / (std::sqrt(vhat) + state.eps);
    }
    std::fill(slot.grad.data.begin(), slot.grad.data.end(), 0.0);
  }
}

double exp_decay_lr(double lr0, double lr1, uint64_t step, uint64_t total) {
  if (total == 0) return lr0;
  const double f = std::min(1.0, static_cast<double>(step) / static_cast<double>(total));
  return lr0 * std::pow(lr1 / lr0, f);
}

GradcheckReport gradcheck(const std::function<double(bool)>& loss_fn, ParamStore& store, double tol,
                          const GradcheckOptions& opts) {
  store.zero_grads();
  loss_fn(true);

  // Snapshot analytic gradients before the finite-difference probes clobber
  // anything.
  std::map<std::string, std::vector<double>> analytic;
  for (const std::string& name : store.names()) analytic[name] = store.at(name).grad.data;

  Rng rng(opts.seed);
  GradcheckReport rep;
  for (const std::string& name : store.names()) {
    ParamSlot& slot = store.at(name);
    const int64_t n = slot.value.size();
    std::vector<int64_t> coords;
    if (n <= opts.max_coords_per_param) {
      coords.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      for (int i = 0; i < opts.max_coords_per_param; ++i) coords.push_back(rng.index(n));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }
    for (int64_t i : coords) {
      const double saved = slot.value.data[static_cast<size_t>(i)];
      slot.value.data[static_cast<size_t>(i)] = saved + opts.h;
      const double fp = loss_fn(false);
      slot.value.data[static_cast<size_t>(i)] = saved - opts.h;
      const double fm = loss_fn(false);
      slot.value.data[static_cast<size_t>(i)] = saved;
      const double numeric = (fp - fm) / (2.0 * opts.h);
      const double a = analytic[name][static_cast<size_t>(i)];
      const double denom = std::max({1e-6, std::fabs(a), std::fabs(numeric)});
      const double rel = std::fabs(a - numeric) / denom;
      rep.coords_checked += 1;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = name;
        rep.worst_index = i;
      }
    }
  }
  store.zero_grads();
  rep.pass = rep.max_rel_err <= tol;
  return rep;
}

}  // namespace simplerf::ad
