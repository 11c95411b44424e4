#include "simplerf/tensorf.hpp"

#include <cmath>
#include <stdexcept>

namespace simplerf {

namespace {

constexpr int kPlane[3][2] = {{1, 2}, {0, 2}, {0, 1}};

struct InterpIdx {
  std::vector<int64_t> i0, i1;
  ad::Array w0, w1;  // [P,1]
};

InterpIdx line_interp(const std::vector<double>& coord, int64_t len) {
  const int64_t p = static_cast<int64_t>(coord.size());
  InterpIdx out;
  out.i0.resize(static_cast<size_t>(p));
  out.i1.resize(static_cast<size_t>(p));
  out.w0 = ad::Array(p, 1);
  out.w1 = ad::Array(p, 1);
  for (int64_t i = 0; i < p; ++i) {
    const double c = coord[static_cast<size_t>(i)];
    int64_t i0 = static_cast<int64_t>(std::floor(c));
    i0 = std::max<int64_t>(0, std::min(i0, len - 2 >= 0 ? len - 2 : 0));
    const double f = std::min(std::max(c - static_cast<double>(i0), 0.0), 1.0);
    out.i0[static_cast<size_t>(i)] = i0;
    out.i1[static_cast<size_t>(i)] = std::min(i0 + 1, len - 1);
    out.w0[i] = 1.0 - f;
    out.w1[i] = f;
  }
  return out;
}

ad::Var gather_lerp(ad::Tape& t, ad::Var table, const InterpIdx& ix) {
  const ad::Var a = t.mul(t.gather_rows(table, ix.i0), t.constant(ix.w0));
  const ad::Var b = t.mul(t.gather_rows(table, ix.i1), t.constant(ix.w1));
  return t.add(a, b);
}

ad::Var gather_bilerp(ad::Tape& t, ad::Var table, const InterpIdx& iu, const InterpIdx& iv,
                      int64_t v_len) {
  const int64_t p = static_cast<int64_t>(iu.i0.size());
  auto flat = [&](const std::vector<int64_t>& u, const std::vector<int64_t>& v) {
    std::vector<int64_t> idx(static_cast<size_t>(p));
    for (int64_t i = 0; i < p; ++i)
      idx[static_cast<size_t>(i)] = u[static_cast<size_t>(i)] * v_len + v[static_cast<size_t>(i)];
    return idx;
  };
  auto wmul = [&](const ad::Array& a, const ad::Array& b) {
    ad::Array out(p, 1);
    for (int64_t i = 0; i < p; ++i) out[i] = a[i] * b[i];
    return out;
  };
  ad::Var acc = t.mul(t.gather_rows(table, flat(iu.i0, iv.i0)), t.constant(wmul(iu.w0, iv.w0)));
  acc = t.add(acc, t.mul(t.gather_rows(table, flat(iu.i0, iv.i1)), t.constant(wmul(iu.w0, iv.w1))));
  acc = t.add(acc, t.mul(t.gather_rows(table, flat(iu.i1, iv.i0)), t.constant(wmul(iu.w1, iv.w0))));
  acc = t.add(acc, t.mul(t.gather_rows(table, flat(iu.i1, iv.i1)), t.constant(wmul(iu.w1, iv.w1))));
  return acc;
}

}  // namespace

TensorfConfig make_augmented(const TensorfConfig& cfg, double z_raise_frac) {
  TensorfConfig out = cfg;
  out.rank_sigma = std::max(1, cfg.rank_sigma / 2);
  for (int a = 0; a < 3; ++a) out.res[a] = std::max(2, cfg.res[a] / 4);
  out.bbox.lo.z = cfg.bbox.lo.z + z_raise_frac * (cfg.bbox.hi.z - cfg.bbox.lo.z);
  return out;
}

void TensorfField::init(ad::ParamStore& store, ad::Rng& rng) const { init_at_res(store, rng, cfg.res); }

void TensorfField::init_at_res(ad::ParamStore& store, ad::Rng& rng, const std::array<int, 3>& res) const {
  for (int a = 0; a < 3; ++a) {
    const int rb = res[kPlane[a][0]], rc = res[kPlane[a][1]];
    store.create(prefix + ".vsig" + std::to_string(a),
                 ad::random_normal(rng, res[a], cfg.rank_sigma, 0.0, 0.1));
    store.create(prefix + ".msig" + std::to_string(a),
                 ad::random_normal(rng, static_cast<int64_t>(rb) * rc, cfg.rank_sigma, 0.0, 0.1));
    store.create(prefix + ".vcol" + std::to_string(a),
                 ad::random_normal(rng, res[a], cfg.rank_color, 0.0, 0.1));
    store.create(prefix + ".mcol" + std::to_string(a),
                 ad::random_normal(rng, static_cast<int64_t>(rb) * rc, cfg.rank_color, 0.0, 0.1));
    store.create(prefix + ".app" + std::to_string(a),
                 ad::random_normal(rng, cfg.rank_color, cfg.feat_dim, 0.0, 0.1));
  }
  Mlp{prefix + ".dec", {cfg.feat_dim + positional_encoding_dim(3, 0, cfg.l_v), cfg.decoder_width, 3}}
      .init(store, rng);
}

std::array<int, 3> TensorfField::current_res(const ad::ParamStore& store) const {
  std::array<int, 3> res{};
  for (int a = 0; a < 3; ++a)
    res[a] = static_cast<int>(store.at(prefix + ".vsig" + std::to_string(a)).value.rows());
  return res;
}

namespace {

struct GridCoords {
  std::array<std::vector<double>, 3> axis;  // continuous [0, res-1]
  ad::Array inside;                         // [P,1] 0/1
};

GridCoords normalize(const TensorfConfig& cfg, const std::array<int, 3>& res, const ad::Array& positions) {
  const int64_t p = positions.rows();
  GridCoords out;
  out.inside = ad::Array(p, 1);
  for (int a = 0; a < 3; ++a) out.axis[static_cast<size_t>(a)].resize(static_cast<size_t>(p));
  for (int64_t i = 0; i < p; ++i) {
    const Vec3 pt{positions.at(i, 0), positions.at(i, 1), positions.at(i, 2)};
    out.inside[i] = cfg.bbox.contains(pt) ? 1.0 : 0.0;
    for (int a = 0; a < 3; ++a) {
      const double lo = cfg.bbox.lo[a], hi = cfg.bbox.hi[a];
      double x01 = (pt[a] - lo) / (hi - lo);
      x01 = std::min(std::max(x01, 0.0), 1.0);
      out.axis[static_cast<size_t>(a)][static_cast<size_t>(i)] = x01 * static_cast<double>(res[a] - 1);
    }
  }
  return out;
}

}  // namespace

ad::Var TensorfField::density_factor(ad::Tape& t, ad::ParamStore& store, const ad::Array& positions) const {
  const std::array<int, 3> res = current_res(store);
  const GridCoords gc = normalize(cfg, res, positions);
  ad::Var g;
  for (int a = 0; a < 3; ++a) {
    const int b = kPlane[a][0], c = kPlane[a][1];
    const InterpIdx iv = line_interp(gc.axis[static_cast<size_t>(a)], res[a]);
    const InterpIdx iu = line_interp(gc.axis[static_cast<size_t>(b)], res[b]);
    const InterpIdx iw = line_interp(gc.axis[static_cast<size_t>(c)], res[c]);
    const ad::Var vec = gather_lerp(t, t.param(store.at(prefix + ".vsig" + std::to_string(a))), iv);
    const ad::Var mat = gather_bilerp(t, t.param(store.at(prefix + ".msig" + std::to_string(a))), iu, iw, res[c]);
    const ad::Var term = t.sum_axis1(t.mul(vec, mat));
    g = a == 0 ? term : t.add(g, term);
  }
  return g;
}

TensorfField::Query TensorfField::query(ad::Tape& t, ad::ParamStore& store, const ad::Array& positions,
                                        const ad::Array& viewdirs) const {
  const std::array<int, 3> res = current_res(store);
  const GridCoords gc = normalize(cfg, res, positions);

  Query out;
  const ad::Var g = density_factor(t, store, positions);
  ad::Var act;
  if (cfg.density_activation == DensityActivation::Softplus)
    act = t.softplus(t.affine(g, 1.0, cfg.density_shift));
  else
    act = t.sigmoid(t.affine(g, 1.0, cfg.density_shift));
  out.sigma = t.mul(act, t.constant(gc.inside));

  ad::Var h;
  for (int a = 0; a < 3; ++a) {
    const int b = kPlane[a][0], c = kPlane[a][1];
    const InterpIdx iv = line_interp(gc.axis[static_cast<size_t>(a)], res[a]);
    const InterpIdx iu = line_interp(gc.axis[static_cast<size_t>(b)], res[b]);
    const InterpIdx iw = line_interp(gc.axis[static_cast<size_t>(c)], res[c]);
    const ad::Var vec = gather_lerp(t, t.param(store.at(prefix + ".vcol" + std::to_string(a))), iv);
    const ad::Var mat = gather_bilerp(t, t.param(store.at(prefix + ".mcol" + std::to_string(a))), iu, iw, res[c]);
    const ad::Var coef = t.mul(vec, mat);
    const ad::Var term = t.matmul(coef, t.param(store.at(prefix + ".app" + std::to_string(a))));
    h = a == 0 ? term : t.add(h, term);
  }
  const ad::Var pe_v = t.constant(positional_encoding(viewdirs, 0, cfg.l_v));
  const ad::Var dec_in = t.concat_cols(h, pe_v);
  const Mlp dec{prefix + ".dec", {cfg.feat_dim + positional_encoding_dim(3, 0, cfg.l_v), cfg.decoder_width, 3}};
  out.rgb = t.sigmoid(dec.forward(t, store, dec_in));
  return out;
}

ad::Array resample_vector(const ad::Array& v, int64_t new_len) {
  if (new_len == v.rows()) return v;
  ad::Array out(new_len, v.cols());
  for (int64_t i = 0; i < new_len; ++i) {
    const double u = new_len == 1 ? 0.0
                                  : static_cast<double>(i) * static_cast<double>(v.rows() - 1) /
                                        static_cast<double>(new_len - 1);
    const int64_t i0 = std::min(static_cast<int64_t>(std::floor(u)), v.rows() - 2 >= 0 ? v.rows() - 2 : 0);
    const double f = u - static_cast<double>(i0);
    for (int64_t r = 0; r < v.cols(); ++r)
      out.at(i, r) = (1.0 - f) * v.at(i0, r) + f * v.at(std::min(i0 + 1, v.rows() - 1), r);
  }
  return out;
}

ad::Array resample_matrix(const ad::Array& m, int64_t rows, int64_t cols, int64_t new_rows,
                          int64_t new_cols) {
  if (rows * cols != m.rows()) throw std::invalid_argument("resample_matrix: bad layout");
  if (rows == new_rows && cols == new_cols) return m;
  ad::Array out(new_rows * new_cols, m.cols());
  for (int64_t i = 0; i < new_rows; ++i) {
    const double u = new_rows == 1 ? 0.0
                                   : static_cast<double>(i) * static_cast<double>(rows - 1) /
                                         static_cast<double>(new_rows - 1);
    const int64_t i0 = std::min(static_cast<int64_t>(std::floor(u)), rows - 2 >= 0 ? rows - 2 : 0);
    const double fu = u - static_cast<double>(i0);
    const int64_t i1 = std::min(i0 + 1, rows - 1);
    for (int64_t j = 0; j < new_cols; ++j) {
      const double v = new_cols == 1 ? 0.0
                                     : static_cast<double>(j) * static_cast<double>(cols - 1) /
                                           static_cast<double>(new_cols - 1);
      const int64_t j0 = std::min(static_cast<int64_t>(std::floor(v)), cols - 2 >= 0 ? cols - 2 : 0);
      const double fv = v - static_cast<double>(j0);
      const int64_t j1 = std::min(j0 + 1, cols - 1);
      for (int64_t r = 0; r < m.cols(); ++r)
        out.at(i * new_cols + j, r) = (1.0 - fu) * ((1.0 - fv) * m.at(i0 * cols + j0, r) + fv * m.at(i0 * cols + j1, r)) +
                                      fu * ((1.0 - fv) * m.at(i1 * cols + j0, r) + fv * m.at(i1 * cols + j1, r));
    }
  }
  return out;
}

std::vector<std::string> TensorfField::upsample(ad::ParamStore& store, const std::array<int, 3>& new_res) {
  const std::array<int, 3> res = current_res(store);
  std::vector<std::string> touched;
  for (int a = 0; a < 3; ++a) {
    const int b = kPlane[a][0], c = kPlane[a][1];
    for (const char* stem : {".vsig", ".vcol"}) {
      const std::string name = prefix + stem + std::to_string(a);
      ad::ParamSlot& slot = store.at(name);
      slot.value = resample_vector(slot.value, new_res[a]);
      slot.grad = ad::Array::zeros(slot.value.rows(), slot.value.cols());
      touched.push_back(name);
    }
    for (const char* stem : {".msig", ".mcol"}) {
      const std::string name = prefix + stem + std::to_string(a);
      ad::ParamSlot& slot = store.at(name);
      slot.value = resample_matrix(slot.value, res[b], res[c], new_res[b], new_res[c]);
      slot.grad = ad::Array::zeros(slot.value.rows(), slot.value.cols());
      touched.push_back(name);
    }
  }
  return touched;
}

ad::Var TensorfField::tv_penalty(ad::Tape& t, ad::ParamStore& store) const {
  const std::array<int, 3> res = current_res(store);
  ad::Var acc = t.constant(0.0);
  for (int a = 0; a < 3; ++a) {
    const int b = kPlane[a][0], c = kPlane[a][1];
    {
      const ad::Var v = t.param(store.at(prefix + ".vsig" + std::to_string(a)));
      std::vector<int64_t> head(static_cast<size_t>(res[a] - 1)), tail(head.size());
      for (size_t i = 0; i < head.size(); ++i) {
        head[i] = static_cast<int64_t>(i);
        tail[i] = static_cast<int64_t>(i) + 1;
      }
      acc = t.add(acc, t.mean(t.square(t.sub(t.gather_rows(v, tail), t.gather_rows(v, head)))));
    }
    const ad::Var m = t.param(store.at(prefix + ".msig" + std::to_string(a)));
    std::vector<int64_t> du0, du1, dv0, dv1;
    for (int64_t i = 0; i < res[b]; ++i)
      for (int64_t j = 0; j < res[c]; ++j) {
        if (i + 1 < res[b]) {
          du0.push_back(i * res[c] + j);
          du1.push_back((i + 1) * res[c] + j);
        }
        if (j + 1 < res[c]) {
          dv0.push_back(i * res[c] + j);
          dv1.push_back(i * res[c] + j + 1);
        }
      }
    acc = t.add(acc, t.mean(t.square(t.sub(t.gather_rows(m, du1), t.gather_rows(m, du0)))));
    acc = t.add(acc, t.mean(t.square(t.sub(t.gather_rows(m, dv1), t.gather_rows(m, dv0)))));
  }
  return acc;
}

}  // namespace simplerf
