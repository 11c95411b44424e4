#pragma once

#include <array>
#include <string>

#include "simplerf/geometry.hpp"
#include "simplerf/nerf.hpp"
#include "simplerf/tape.hpp"

namespace simplerf {

struct BBox {
  Vec3 lo;
  Vec3 hi;
  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
  }
};

enum class DensityActivation { Softplus, SigmoidCap };

struct TensorfConfig {
  int rank_sigma = 24;
  int rank_color = 72;
  int feat_dim = 27;
  std::array<int, 3> res = {128, 128, 128};
  BBox bbox;
  int l_v = 0;  // view bands for the decoder; 0 feeds the raw direction
  int decoder_width = 32;
  DensityActivation density_activation = DensityActivation::Softplus;
  double density_shift = -3.0;
};

// Halved density rank, 1/64 of the voxel count (resolution / 4 per axis),
// and the lower z bound of the box raised by `z_raise_frac` of its span.
// Color rank and decoder stay unchanged.
TensorfConfig make_augmented(const TensorfConfig& cfg, double z_raise_frac = 0.25);

// Vector-matrix factorization of a density grid and an appearance grid.
// Per axis a with complement plane (b, c):
//   G_sigma(p) = sum_a sum_r vsig_a[x_a, r] * msig_a[(x_b, x_c), r]
//   G_color(p) = sum_a (vcol_a o mcol_a) row  *  app_a   (rank_color x feat_dim)
// Interpolation is linear on vectors, bilinear on matrices, with clamped
// edges; samples outside the box contribute zero density.
struct TensorfField {
  TensorfConfig cfg;
  std::string prefix;

  void init(ad::ParamStore& store, ad::Rng& rng) const;
  void init_at_res(ad::ParamStore& store, ad::Rng& rng, const std::array<int, 3>& res) const;

  struct Query {
    ad::Var sigma;  // [P,1]
    ad::Var rgb;    // [P,3]
  };
  Query query(ad::Tape& t, ad::ParamStore& store, const ad::Array& positions,
              const ad::Array& viewdirs) const;

  // Raw density factor value G_sigma (before activation/shift), for oracles.
  ad::Var density_factor(ad::Tape& t, ad::ParamStore& store, const ad::Array& positions) const;

  // Linear resample of every factor onto `new_res`, preserving endpoint
  // alignment; Adam moments of resized arrays must be dropped by the caller
  // via the returned names.
  std::vector<std::string> upsample(ad::ParamStore& store, const std::array<int, 3>& new_res);

  // Mean squared difference of adjacent density-factor entries.
  ad::Var tv_penalty(ad::Tape& t, ad::ParamStore& store) const;

  std::array<int, 3> current_res(const ad::ParamStore& store) const;
};

// Value-level linear resample helpers shared with tests.
ad::Array resample_vector(const ad::Array& v, int64_t new_len);
ad::Array resample_matrix(const ad::Array& m, int64_t rows, int64_t cols, int64_t new_rows,
                          int64_t new_cols);

}  // namespace simplerf
