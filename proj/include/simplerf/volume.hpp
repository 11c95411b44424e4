#pragma once

#include <vector>

#include "simplerf/array.hpp"
#include "simplerf/camera.hpp"
#include "simplerf/tape.hpp"

namespace simplerf {

// Sample distances are measured along unit-norm ray directions, so a sample
// at distance z sits at o + z*d.
struct SampleSet {
  ad::Array z;      // [rays, n]
  ad::Array delta;  // [rays, n]; consecutive gaps, last entry = (far-near)/n
  int rays = 0;
  int n = 0;
};

// s parameterizes a ray linearly in disparity: s=0 at near, s=1 at far.
// far may be infinite (1/far -> 0).
double s_from_z(double z, double near, double far);
double z_from_s(double s, double near, double far);

// Stratified samples, one per stratum. With jitter disabled, stratum
// midpoints. `s_lo` restricts the window to s in [s_lo, 1]; linear-in-z
// sampling uses the matching z window. Disparity mode places strata uniformly
// in 1/z.
SampleSet sample_stratified(int n_rays, int n, double near, double far, bool in_disparity,
                            double s_lo, bool jitter, ad::Rng* rng);

// Inverse-CDF draws from the piecewise-constant density proportional to
// w + eps_pdf over bins delimited by midpoints between consecutive z.
// Deterministic (stratum midpoints) when jitter is off. Output sorted.
std::vector<double> sample_pdf(const std::vector<double>& z, const std::vector<double>& w, int m,
                               double eps_pdf, bool jitter, ad::Rng* rng);

// Sorted union of per-ray coarse samples and PDF resamples; deltas recomputed.
SampleSet merge_samples(const SampleSet& coarse, const std::vector<std::vector<double>>& extra,
                        double near, double far);

SampleSet sample_set_from(const std::vector<std::vector<double>>& z_rows, double near, double far);

// w_i = exp(-sum_{j<i} delta_j sigma_j) * (1 - exp(-delta_i sigma_i))
ad::Var render_weights(ad::Tape& t, ad::Var sigma, const ad::Array& delta);

struct RenderOut {
  ad::Var color;       // [rays, 3]
  ad::Var depth;       // [rays, 1], sum w_i z_i
  ad::Var depth_norm;  // [rays, 1], depth / max(opacity, 1e-6)
  ad::Var weights;     // [rays, n]
  ad::Var opacity;     // [rays, 1]
};

// sigma: [rays, n]; rgb: [rays*n, 3] with samples of one ray contiguous.
RenderOut composite(ad::Tape& t, ad::Var sigma, ad::Var rgb, const SampleSet& samples,
                    const Vec3& background);

// Per-point world positions [rays*n, 3] and matching tiled unit view
// directions [rays*n, 3] for a sample set.
void sample_positions(const RayBatch& rays, const SampleSet& samples, ad::Array& positions,
                      ad::Array& viewdirs);

}  // namespace simplerf
