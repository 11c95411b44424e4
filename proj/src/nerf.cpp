#include "simplerf/nerf.hpp"

#include <cmath>
#include <stdexcept>

namespace simplerf {

int positional_encoding_dim(int d, int d1, int d2) {
  if (d1 < 0 || d2 < d1) throw std::invalid_argument("positional_encoding: need 0 <= d1 <= d2");
  return d * 2 * (d2 - d1) + (d1 == 0 ? d : 0);
}

ad::Array positional_encoding(const ad::Array& x, int d1, int d2) {
  const int64_t p = x.rows();
  const int64_t d = x.cols();
  const int64_t out_dim = positional_encoding_dim(static_cast<int>(d), d1, d2);
  ad::Array out(p, out_dim);
  for (int64_t i = 0; i < p; ++i) {
    int64_t c = 0;
    if (d1 == 0)
      for (int64_t j = 0; j < d; ++j) out.at(i, c++) = x.at(i, j);
    for (int band = d1; band < d2; ++band) {
      const double scale = std::ldexp(1.0, band);  // 2^band
      for (int64_t j = 0; j < d; ++j) out.at(i, c++) = std::sin(scale * x.at(i, j));
      for (int64_t j = 0; j < d; ++j) out.at(i, c++) = std::cos(scale * x.at(i, j));
    }
  }
  return out;
}

void Mlp::init(ad::ParamStore& store, ad::Rng& rng) const {
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    const int fan_in = dims[i], fan_out = dims[i + 1];
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    store.create(prefix + ".w" + std::to_string(i), ad::random_uniform(rng, fan_in, fan_out, -a, a));
    store.create(prefix + ".b" + std::to_string(i), ad::Array::zeros(1, fan_out));
  }
}

ad::Var Mlp::forward(ad::Tape& t, ad::ParamStore& store, ad::Var x) const {
  ad::Var h = x;
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    const ad::Var w = t.param(store.at(prefix + ".w" + std::to_string(i)));
    const ad::Var b = t.param(store.at(prefix + ".b" + std::to_string(i)));
    h = t.add(t.matmul(h, w), b);
    if (i + 2 < dims.size()) h = t.relu(h);
  }
  return h;
}

NerfConfig make_augmented(const NerfConfig& cfg, NerfVariant variant) {
  if (variant == NerfVariant::Main) throw std::invalid_argument("make_augmented: pick a reduced variant");
  NerfConfig out = cfg;
  out.variant = variant;
  return out;
}

namespace {

std::vector<int> trunk_dims(const NerfConfig& cfg, int in) {
  std::vector<int> dims{in};
  for (int i = 0; i < cfg.trunk_layers; ++i) dims.push_back(cfg.trunk_width);
  return dims;
}

int trunk_in_dim(const NerfConfig& cfg) {
  const int bands = cfg.variant == NerfVariant::Smoothing ? cfg.l_p_smooth : cfg.l_p;
  return positional_encoding_dim(3, 0, bands);
}

int head_in_dim(const NerfConfig& cfg) {
  int in = cfg.trunk_width;
  if (cfg.variant == NerfVariant::Smoothing) in += positional_encoding_dim(3, cfg.l_p_smooth, cfg.l_p);
  if (cfg.variant != NerfVariant::Lambertian) in += positional_encoding_dim(3, 0, cfg.l_v);
  return in;
}

}  // namespace

Mlp NerfField::trunk() const { return Mlp{prefix + ".n1", trunk_dims(cfg, trunk_in_dim(cfg))}; }

Mlp NerfField::head() const { return Mlp{prefix + ".n2", {head_in_dim(cfg), cfg.head_width, 3}}; }

void NerfField::init(ad::ParamStore& store, ad::Rng& rng) const {
  trunk().init(store, rng);
  Mlp{prefix + ".sig", {cfg.trunk_width, 1}}.init(store, rng);
  head().init(store, rng);
}

NerfField::Query NerfField::query(ad::Tape& t, ad::ParamStore& store, const ad::Array& positions,
                                  const ad::Array& viewdirs) const {
  if (positions.cols() != 3) throw std::invalid_argument("query: positions must be [P,3]");
  const int pos_bands = cfg.variant == NerfVariant::Smoothing ? cfg.l_p_smooth : cfg.l_p;
  const ad::Var pe_pos = t.constant(positional_encoding(positions, 0, pos_bands));

  const ad::Var h = trunk().forward(t, store, pe_pos);
  const ad::Var sigma_raw = Mlp{prefix + ".sig", {cfg.trunk_width, 1}}.forward(t, store, h);
  Query out;
  out.sigma = t.softplus(t.affine(sigma_raw, 1.0, cfg.sigma_shift));

  ad::Var head_in = h;
  if (cfg.variant == NerfVariant::Smoothing)
    head_in = t.concat_cols(head_in, t.constant(positional_encoding(positions, cfg.l_p_smooth, cfg.l_p)));
  if (cfg.variant != NerfVariant::Lambertian) {
    if (viewdirs.rows() != positions.rows()) throw std::invalid_argument("query: viewdirs must match positions");
    head_in = t.concat_cols(head_in, t.constant(positional_encoding(viewdirs, 0, cfg.l_v)));
  }
  out.rgb = t.sigmoid(head().forward(t, store, head_in));
  return out;
}

}  // namespace simplerf
