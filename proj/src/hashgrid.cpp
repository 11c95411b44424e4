#include "simplerf/hashgrid.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace simplerf {

uint64_t hash_index(int64_t x, int64_t y, int64_t z, const std::array<uint64_t, 3>& primes,
                    uint64_t table_size) {
  const uint64_t h = static_cast<uint64_t>(x) * primes[0] ^ static_cast<uint64_t>(y) * primes[1] ^
                     static_cast<uint64_t>(z) * primes[2];
  return h % table_size;
}

HashGridConfig make_augmented(const HashGridConfig& cfg, int divisor_log2, int min_log2, double s_near) {
  HashGridConfig out = cfg;
  out.table_size = std::max<int64_t>(cfg.table_size >> divisor_log2, int64_t{1} << min_log2);
  out.s_near = s_near;
  return out;
}

int64_t hash_collision_count(uint64_t table_size, int probe_res, const std::array<uint64_t, 3>& primes) {
  std::unordered_set<uint64_t> seen;
  seen.reserve(static_cast<size_t>(probe_res) * probe_res * probe_res);
  int64_t collisions = 0;
  for (int x = 0; x < probe_res; ++x)
    for (int y = 0; y < probe_res; ++y)
      for (int z = 0; z < probe_res; ++z)
        if (!seen.insert(hash_index(x, y, z, primes, table_size)).second) ++collisions;
  return collisions;
}

int HashGridField::level_res(int level) const {
  return static_cast<int>(std::floor(cfg.base_res * std::pow(cfg.growth, level)));
}

bool HashGridField::level_dense(int level) const {
  const int64_t n = level_res(level) + 1;
  return n * n * n <= cfg.table_size;
}

int64_t HashGridField::level_rows(int level) const {
  const int64_t n = level_res(level) + 1;
  return level_dense(level) ? n * n * n : cfg.table_size;
}

void HashGridField::init(ad::ParamStore& store, ad::Rng& rng) const {
  for (int l = 0; l < cfg.levels; ++l)
    store.create(prefix + ".tab" + std::to_string(l),
                 ad::random_uniform(rng, level_rows(l), cfg.feat, -1e-4, 1e-4));
  Mlp{prefix + ".n1", {cfg.levels * cfg.feat, cfg.density_width, cfg.density_out}}.init(store, rng);
  Mlp{prefix + ".n2",
      {cfg.density_out - 1 + positional_encoding_dim(3, 0, cfg.l_v), cfg.head_width, 3}}
      .init(store, rng);
}

ad::Var HashGridField::encode(ad::Tape& t, ad::ParamStore& store, const ad::Array& positions) const {
  const int64_t p = positions.rows();
  if (positions.cols() != 3) throw std::invalid_argument("encode: positions must be [P,3]");

  // Normalized box coordinates, clamped.
  std::array<std::vector<double>, 3> x01;
  for (auto& v : x01) v.resize(static_cast<size_t>(p));
  for (int64_t i = 0; i < p; ++i)
    for (int a = 0; a < 3; ++a) {
      const double lo = cfg.bbox.lo[a], hi = cfg.bbox.hi[a];
      double u = (positions.at(i, a) - lo) / (hi - lo);
      x01[static_cast<size_t>(a)][static_cast<size_t>(i)] = std::min(std::max(u, 0.0), 1.0);
    }

  ad::Var features;
  for (int l = 0; l < cfg.levels; ++l) {
    const int res = level_res(l);
    const bool dense = level_dense(l);
    const int64_t side = res + 1;
    const ad::Var table = t.param(store.at(prefix + ".tab" + std::to_string(l)));

    std::array<std::vector<int64_t>, 3> c0;
    std::array<std::vector<double>, 3> frac;
    for (int a = 0; a < 3; ++a) {
      c0[static_cast<size_t>(a)].resize(static_cast<size_t>(p));
      frac[static_cast<size_t>(a)].resize(static_cast<size_t>(p));
      for (int64_t i = 0; i < p; ++i) {
        const double g = x01[static_cast<size_t>(a)][static_cast<size_t>(i)] * res;
        int64_t i0 = static_cast<int64_t>(std::floor(g));
        i0 = std::max<int64_t>(0, std::min<int64_t>(i0, res - 1));
        c0[static_cast<size_t>(a)][static_cast<size_t>(i)] = i0;
        frac[static_cast<size_t>(a)][static_cast<size_t>(i)] = g - static_cast<double>(i0);
      }
    }

    ad::Var level_feat;
    for (int corner = 0; corner < 8; ++corner) {
      const int ox = corner & 1, oy = (corner >> 1) & 1, oz = (corner >> 2) & 1;
      std::vector<int64_t> rows(static_cast<size_t>(p));
      ad::Array w(p, 1);
      for (int64_t i = 0; i < p; ++i) {
        const int64_t vx = c0[0][static_cast<size_t>(i)] + ox;
        const int64_t vy = c0[1][static_cast<size_t>(i)] + oy;
        const int64_t vz = c0[2][static_cast<size_t>(i)] + oz;
        rows[static_cast<size_t>(i)] =
            dense ? (vx * side + vy) * side + vz
                  : static_cast<int64_t>(hash_index(vx, vy, vz, cfg.primes,
                                                    static_cast<uint64_t>(cfg.table_size)));
        const double wx = ox ? frac[0][static_cast<size_t>(i)] : 1.0 - frac[0][static_cast<size_t>(i)];
        const double wy = oy ? frac[1][static_cast<size_t>(i)] : 1.0 - frac[1][static_cast<size_t>(i)];
        const double wz = oz ? frac[2][static_cast<size_t>(i)] : 1.0 - frac[2][static_cast<size_t>(i)];
        w[i] = wx * wy * wz;
      }
      const ad::Var term = t.mul(t.gather_rows(table, std::move(rows)), t.constant(std::move(w)));
      level_feat = corner == 0 ? term : t.add(level_feat, term);
    }
    features = l == 0 ? level_feat : t.concat_cols(features, level_feat);
  }
  return features;
}

HashGridField::Query HashGridField::query(ad::Tape& t, ad::ParamStore& store, const ad::Array& positions,
                                          const ad::Array& viewdirs) const {
  const ad::Var feat = encode(t, store, positions);
  const Mlp n1{prefix + ".n1", {cfg.levels * cfg.feat, cfg.density_width, cfg.density_out}};
  const ad::Var d = n1.forward(t, store, feat);

  Query out;
  out.sigma = t.softplus(t.affine(t.slice_cols(d, 0, 1), 1.0, cfg.sigma_shift));
  const ad::Var latent = t.slice_cols(d, 1, cfg.density_out);
  const ad::Var pe_v = t.constant(positional_encoding(viewdirs, 0, cfg.l_v));
  const Mlp n2{prefix + ".n2",
               {cfg.density_out - 1 + positional_encoding_dim(3, 0, cfg.l_v), cfg.head_width, 3}};
  out.rgb = t.sigmoid(n2.forward(t, store, t.concat_cols(latent, pe_v)));
  return out;
}

}  // namespace simplerf
