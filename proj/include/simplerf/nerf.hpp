#pragma once

#include <string>
#include <vector>

#include "simplerf/array.hpp"
#include "simplerf/tape.hpp"

namespace simplerf {

// gamma(x) = [x?, sin(2^d1 x), cos(2^d1 x), ..., sin(2^(d2-1) x), cos(2^(d2-1) x)],
// with the raw input prepended iff d1 == 0. Output width:
// d * 2 * (d2 - d1) + (d if d1 == 0 else 0).
ad::Array positional_encoding(const ad::Array& x, int d1, int d2);
int positional_encoding_dim(int d, int d1, int d2);

// Plain fully connected stack; hidden layers ReLU, last layer linear.
struct Mlp {
  std::string prefix;
  std::vector<int> dims;  // dims[0] inputs, dims.back() outputs

  void init(ad::ParamStore& store, ad::Rng& rng) const;
  ad::Var forward(ad::Tape& t, ad::ParamStore& store, ad::Var x) const;
};

enum class NerfVariant { Main, Smoothing, Lambertian };

struct NerfConfig {
  int l_p = 10;         // position frequency bands
  int l_v = 4;          // view frequency bands
  int l_p_smooth = 3;   // low-frequency cut for the smoothing variant
  int trunk_layers = 4;
  int trunk_width = 64;
  int head_width = 32;
  double sigma_shift = 0.0;
  NerfVariant variant = NerfVariant::Main;
};

// Returns a copy configured as the requested reduced-capacity variant.
NerfConfig make_augmented(const NerfConfig& cfg, NerfVariant variant);

// One radiance field: trunk N1 (positions -> sigma, latent h) and head N2
// (h [+ encodings] -> rgb).
//  Main:       N1(gamma(p, 0, l_p));            N2(h, gamma(v, 0, l_v))
//  Smoothing:  N1(gamma(p, 0, l_p_smooth));     N2(h, gamma(p, l_p_smooth, l_p), gamma(v, 0, l_v))
//  Lambertian: N1(gamma(p, 0, l_p));            N2(h)
struct NerfField {
  NerfConfig cfg;
  std::string prefix;

  Mlp trunk() const;
  Mlp head() const;
  void init(ad::ParamStore& store, ad::Rng& rng) const;

  struct Query {
    ad::Var sigma;  // [P,1]
    ad::Var rgb;    // [P,3]
  };
  Query query(ad::Tape& t, ad::ParamStore& store, const ad::Array& positions,
              const ad::Array& viewdirs) const;
};

}  // namespace simplerf
