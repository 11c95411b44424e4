#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "simplerf/config.hpp"
#include "simplerf/hashgrid.hpp"
#include "simplerf/nerf.hpp"
#include "simplerf/params.hpp"
#include "simplerf/scene.hpp"
#include "simplerf/supervision.hpp"
#include "simplerf/tensorf.hpp"
#include "simplerf/volume.hpp"

namespace simplerf {

// Non-finite loss or other numerical breakdown; the CLI maps this to its
// numerical-failure exit.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LossBreakdown {
  int iteration = 0;
  double total = 0.0;
  double l_main = 0.0;       // photometric, main model(s)
  double l_aug_photo = 0.0;  // photometric, augmented models
  double l_sd = 0.0;         // sparse keypoint depth
  double l_aug = 0.0;        // masked main/augmented depth consistency
  double l_cfc = 0.0;        // masked coarse/fine depth consistency
  double l_mc = 0.0;         // mass concentration entropy
  double l_tv = 0.0;         // factor smoothness
  std::string jsonl() const;
};

// Inference-cost accounting for one render: how many field queries ran and
// which parameter tensors they touched.
struct RenderAudit {
  int64_t queries = 0;
  int64_t param_elements = 0;
  std::vector<std::string> touched_params;  // sorted, unique
  bool main_only = true;  // false if any touched name lies outside the inference prefixes
  int64_t flop_proxy() const { return queries * param_elements; }
};

// Tandem main+augmented training for one backend over one scene bundle, plus
// inference rendering and checkpoint round-trip.
class Trainer {
 public:
  Trainer(RunConfig cfg, SceneBundle bundle);

  // Runs cfg.iterations steps and returns every logged record; writes one
  // JSON line per log_every iterations to `log` when given.
  std::vector<LossBreakdown> train(std::ostream* log = nullptr);

  // Main model only, stratified jitter off, deterministic.
  View render(const Camera& cam, RenderAudit* audit = nullptr);

  void save(const std::string& path) const;
  static Trainer load(const std::string& path, SceneBundle bundle);

  const RunConfig& config() const { return cfg_; }
  const SceneBundle& bundle() const { return bundle_; }
  ad::ParamStore& params() { return store_; }
  int activation_iteration() const { return activation_iter_; }
  const std::vector<std::string>& inference_prefixes() const { return inference_prefixes_; }

 private:
  struct Batch;
  struct Rendered {
    RenderOut out;
    SampleSet samples;
  };

  Trainer(RunConfig cfg, SceneBundle bundle, bool init_params);
  void build();
  LossBreakdown step(int iter);
  Batch sample_batch();
  ReliabilityMasks batch_masks(const Batch& b, const std::vector<double>& z_a,
                               const std::vector<double>& z_m) const;

  Rendered run_nerf(ad::Tape& t, const NerfField& field, const RayBatch& rays,
                    const SampleSet& samples);
  Rendered run_tensorf(ad::Tape& t, const TensorfField& field, const RayBatch& rays,
                       const SampleSet& samples);
  Rendered run_hashgrid(ad::Tape& t, const HashGridField& field, const RayBatch& rays,
                        const SampleSet& samples);

  RunConfig cfg_;
  SceneBundle bundle_;
  ad::ParamStore store_;
  ad::AdamState adam_;
  ad::Rng rng_;
  double near_ = 0.0, far_ = 0.0;
  int activation_iter_ = 0;

  NerfField nerf_coarse_, nerf_fine_, nerf_smooth_, nerf_lambert_;
  TensorfField tf_main_, tf_aug_;
  HashGridField hg_main_, hg_aug_;

  std::vector<int> nearest_train_;  // bundle view id -> nearest train view id (-1: none)
  std::vector<int> upsample_iters_;
  std::vector<std::array<int, 3>> upsample_res_;
  std::vector<std::string> inference_prefixes_;
};

}  // namespace simplerf
