#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "simplerf/nerf.hpp"
#include "simplerf/tape.hpp"
#include "simplerf/tensorf.hpp"

namespace simplerf {

struct HashGridConfig {
  int levels = 8;
  int feat = 2;
  int base_res = 16;
  double growth = 1.38;
  int64_t table_size = int64_t{1} << 14;
  std::array<uint64_t, 3> primes = {1ull, 2654435761ull, 805459861ull};
  BBox bbox;
  int l_v = 4;
  int density_width = 32;
  int density_out = 16;  // first channel sigma, rest latent
  int head_width = 32;
  double sigma_shift = -1.0;
  double s_near = 0.0;  // sampling window start, in disparity-linear s
};

// XOR of coordinate-prime products, wrapping modulo 2^64, reduced mod T.
uint64_t hash_index(int64_t x, int64_t y, int64_t z, const std::array<uint64_t, 3>& primes,
                    uint64_t table_size);

// Table shrunk by 2^divisor_log2 (floored at 2^min_log2) and the sampling
// window start raised to s_near. Level layout is unchanged.
HashGridConfig make_augmented(const HashGridConfig& cfg, int divisor_log2 = 10, int min_log2 = 4,
                              double s_near = 0.3);

// Number of probe-lattice vertices whose hash index coincides with an
// earlier vertex's, over the [0, probe_res)^3 integer lattice.
int64_t hash_collision_count(uint64_t table_size, int probe_res, const std::array<uint64_t, 3>& primes);

// Multiresolution feature grid: per level, trilinear blend of 8 corner rows
// from a feature table; levels whose dense vertex count fits the table are
// indexed directly, others through hash_index. Features feed a density MLP
// (sigma + latent) and a view-conditioned color head.
struct HashGridField {
  HashGridConfig cfg;
  std::string prefix;

  int level_res(int level) const;
  bool level_dense(int level) const;
  int64_t level_rows(int level) const;

  void init(ad::ParamStore& store, ad::Rng& rng) const;

  struct Query {
    ad::Var sigma;  // [P,1]
    ad::Var rgb;    // [P,3]
  };
  Query query(ad::Tape& t, ad::ParamStore& store, const ad::Array& positions,
              const ad::Array& viewdirs) const;

  // Encoded features [P, levels*feat] as a tape expression; exposed for
  // encoding-level gradient checks.
  ad::Var encode(ad::Tape& t, ad::ParamStore& store, const ad::Array& positions) const;
};

}  // namespace simplerf
