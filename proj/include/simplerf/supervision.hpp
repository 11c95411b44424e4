#pragma once

#include <vector>

#include "simplerf/camera.hpp"
#include "simplerf/tape.hpp"

namespace simplerf {

// Per-ray reprojection consistency of two depth estimates, and the masks
// deciding which estimate may supervise the other. A patch around each ray's
// pixel is lifted with each depth, reprojected into the nearest training
// view, and compared against the source patch by MSE; smaller error wins,
// subject to the absolute gate e_tau. Ties grant both sides.
struct ReliabilityMasks {
  std::vector<double> e_a, e_m;    // +inf where reprojection was invalid
  std::vector<uint8_t> m_a, m_m;   // 1 where that estimate may supervise
};

// The gate applied per ray: an estimate supervises only if its error is no
// worse than the other's and within the absolute threshold.
struct MaskPair {
  uint8_t m_a, m_m;
};
MaskPair mask_pair(double e_a, double e_m, double e_tau);

ReliabilityMasks reliability_masks(const std::vector<Pixel>& pixels, const std::vector<double>& z_a,
                                   const std::vector<double>& z_m, const Camera& src,
                                   const Image& src_img, const Camera& dst, const Image& dst_img,
                                   int patch_k, double e_tau);

// mean over rays of m_a*(z_m - sg(z_a))^2 + m_m*(sg(z_m) - z_a)^2, where sg
// is the stop-gradient. z_m, z_a: [R,1] tape vars.
ad::Var loss_augmented_depth(ad::Tape& t, ad::Var z_m, ad::Var z_a, const ReliabilityMasks& masks);

// Same structure across the coarse/fine pair: the fine mask gates supervision
// of the coarse depth and vice versa.
ad::Var loss_coarse_fine(ad::Tape& t, ad::Var z_c, ad::Var z_f, const ReliabilityMasks& masks_cf);

// mean over keypoints of (z - z_hat)^2.
ad::Var loss_depth_to(ad::Tape& t, ad::Var z, const ad::Array& z_hat);

// Canonical two-model form: loss_depth_to(z_m) + loss_depth_to(z_a).
ad::Var loss_sparse_depth(ad::Tape& t, ad::Var z_m, ad::Var z_a, const ad::Array& z_hat);

// Entropy of per-ray rendering mass pooled into n_groups contiguous groups
// (last group absorbs the remainder), normalized by max(total, eps).
// Uniform groups give ln(n_groups); mass in one group gives 0.
ad::Var loss_mass_concentration(ad::Tape& t, ad::Var weights, int n_groups, double eps = 1e-6);

}  // namespace simplerf
