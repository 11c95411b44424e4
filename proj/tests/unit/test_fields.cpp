#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "simplerf/hashgrid.hpp"
#include "simplerf/nerf.hpp"
#include "simplerf/tensorf.hpp"

using namespace simplerf;

namespace {

// Dense contraction of the factorized density grid, evaluated naively.
double dense_density(const ad::ParamStore& store, const std::string& prefix,
                     const TensorfConfig& cfg, const std::array<int, 3>& res, const Vec3& p) {
  if (!cfg.bbox.contains(p)) return 0.0;
  constexpr int plane[3][2] = {{1, 2}, {0, 2}, {0, 1}};
  std::array<double, 3> coord{};
  for (int a = 0; a < 3; ++a) {
    const double u = (p[a] - cfg.bbox.lo[a]) / (cfg.bbox.hi[a] - cfg.bbox.lo[a]);
    coord[static_cast<size_t>(a)] = std::min(std::max(u, 0.0), 1.0) * (res[a] - 1);
  }
  // Full grid G[i,j,k], then trilinear interpolation.
  std::vector<double> grid(static_cast<size_t>(res[0]) * res[1] * res[2], 0.0);
  for (int a = 0; a < 3; ++a) {
    const auto& v = store.at(prefix + ".vsig" + std::to_string(a)).value;
    const auto& m = store.at(prefix + ".msig" + std::to_string(a)).value;
    const int rc = res[plane[a][1]];
    for (int i = 0; i < res[0]; ++i)
      for (int j = 0; j < res[1]; ++j)
        for (int k = 0; k < res[2]; ++k) {
          const int idx3[3] = {i, j, k};
          const int64_t row = static_cast<int64_t>(idx3[plane[a][0]]) * rc + idx3[plane[a][1]];
          double s = 0.0;
          for (int r = 0; r < cfg.rank_sigma; ++r) s += v.at(idx3[a], r) * m.at(row, r);
          grid[(static_cast<size_t>(i) * res[1] + j) * res[2] + k] += s;
        }
  }
  auto cell = [&](int i, int j, int k) {
    return grid[(static_cast<size_t>(i) * res[1] + j) * res[2] + k];
  };
  int i0[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    i0[a] = std::min(static_cast<int>(std::floor(coord[static_cast<size_t>(a)])), res[a] - 2);
    i0[a] = std::max(i0[a], 0);
    f[a] = coord[static_cast<size_t>(a)] - i0[a];
  }
  double acc = 0.0;
  for (int di = 0; di < 2; ++di)
    for (int dj = 0; dj < 2; ++dj)
      for (int dk = 0; dk < 2; ++dk) {
        const double w = (di ? f[0] : 1 - f[0]) * (dj ? f[1] : 1 - f[1]) * (dk ? f[2] : 1 - f[2]);
        acc += w * cell(std::min(i0[0] + di, res[0] - 1), std::min(i0[1] + dj, res[1] - 1),
                        std::min(i0[2] + dk, res[2] - 1));
      }
  return acc;
}

TensorfConfig tiny_tensorf() {
  TensorfConfig cfg;
  cfg.rank_sigma = 2;
  cfg.rank_color = 3;
  cfg.feat_dim = 4;
  cfg.res = {4, 4, 4};
  cfg.bbox = {{-1, -1, -1}, {1, 1, 1}};
  cfg.decoder_width = 8;
  return cfg;
}

// Products wrap modulo 2^64 before the XOR; the reduction happens once.
uint64_t hash_oracle(int64_t x, int64_t y, int64_t z, const std::array<uint64_t, 3>& primes,
                     uint64_t table) {
  const unsigned __int128 two64 = static_cast<unsigned __int128>(1) << 64;
  auto mul64 = [two64](uint64_t a, uint64_t b) {
    return static_cast<uint64_t>(static_cast<unsigned __int128>(a) * b % two64);
  };
  const uint64_t h = mul64(static_cast<uint64_t>(x), primes[0]) ^
                     mul64(static_cast<uint64_t>(y), primes[1]) ^
                     mul64(static_cast<uint64_t>(z), primes[2]);
  return h % table;
}

}  // namespace

TEST_CASE("positional encoding widths") {
  CHECK(positional_encoding_dim(3, 0, 10) == 63);
  CHECK(positional_encoding_dim(3, 0, 3) == 21);
  CHECK(positional_encoding_dim(3, 3, 10) == 42);
  CHECK(positional_encoding_dim(3, 0, 0) == 3);
  CHECK_THROWS_AS(positional_encoding_dim(3, 4, 2), std::invalid_argument);
}

TEST_CASE("positional encoding lays out raw, then sin/cos per band") {
  ad::Array x(1, 3);
  x.at(0, 0) = 0.5;
  x.at(0, 1) = -1.0;
  x.at(0, 2) = 2.0;
  const ad::Array enc = positional_encoding(x, 0, 2);
  REQUIRE(enc.cols() == 15);
  CHECK(enc.at(0, 0) == 0.5);
  CHECK(enc.at(0, 2) == 2.0);
  CHECK(enc.at(0, 3) == doctest::Approx(std::sin(0.5)));
  CHECK(enc.at(0, 5) == doctest::Approx(std::sin(2.0)));
  CHECK(enc.at(0, 6) == doctest::Approx(std::cos(0.5)));
  CHECK(enc.at(0, 9) == doctest::Approx(std::sin(1.0)));
  CHECK(enc.at(0, 13) == doctest::Approx(std::cos(-2.0)));

  const ad::Array high = positional_encoding(x, 2, 3);
  REQUIRE(high.cols() == 6);
  CHECK(high.at(0, 0) == doctest::Approx(std::sin(2.0)));
  CHECK(high.at(0, 3) == doctest::Approx(std::cos(2.0)));
}

TEST_CASE("mlp forward matches a naive evaluation") {
  ad::ParamStore store;
  ad::Rng rng(5);
  const Mlp mlp{"m", {2, 4, 3}};
  mlp.init(store, rng);
  CHECK(store.at("m.w0").value.rows() == 2);
  CHECK(store.at("m.w0").value.cols() == 4);
  CHECK(store.at("m.b1").value.cols() == 3);

  ad::Array x(1, 2);
  x.at(0, 0) = 0.7;
  x.at(0, 1) = -0.3;
  ad::Tape t;
  const ad::Var y = mlp.forward(t, store, t.constant(x));

  double hidden[4];
  for (int j = 0; j < 4; ++j) {
    double s = store.at("m.b0").value.at(0, j);
    s += 0.7 * store.at("m.w0").value.at(0, j) - 0.3 * store.at("m.w0").value.at(1, j);
    hidden[j] = std::max(s, 0.0);
  }
  for (int k = 0; k < 3; ++k) {
    double s = store.at("m.b1").value.at(0, k);
    for (int j = 0; j < 4; ++j) s += hidden[j] * store.at("m.w1").value.at(j, k);
    CHECK(t.val(y)[static_cast<size_t>(k)] == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("reduced radiance field variants rewire the encodings") {
  NerfConfig cfg;
  cfg.l_p = 10;
  cfg.l_v = 4;
  cfg.l_p_smooth = 3;
  cfg.trunk_width = 16;

  const NerfField main_field{cfg, "main"};
  CHECK(main_field.trunk().dims.front() == 63);
  CHECK(main_field.head().dims.front() == 16 + 27);

  const NerfField smooth{make_augmented(cfg, NerfVariant::Smoothing), "s"};
  CHECK(smooth.trunk().dims.front() == 21);
  CHECK(smooth.head().dims.front() == 16 + 42 + 27);

  const NerfField lambert{make_augmented(cfg, NerfVariant::Lambertian), "l"};
  CHECK(lambert.trunk().dims.front() == 63);
  CHECK(lambert.head().dims.front() == 16);

  CHECK_THROWS_AS(make_augmented(cfg, NerfVariant::Main), std::invalid_argument);
}

TEST_CASE("lambertian variant ignores the view direction") {
  NerfConfig cfg;
  cfg.trunk_layers = 2;
  cfg.trunk_width = 8;
  cfg.head_width = 8;
  const NerfField lam{make_augmented(cfg, NerfVariant::Lambertian), "l"};
  ad::ParamStore store;
  ad::Rng rng(9);
  lam.init(store, rng);

  ad::Array pos(2, 3);
  pos.at(0, 0) = 0.2;
  pos.at(1, 2) = -0.4;
  ad::Array dir_a(2, 3), dir_b(2, 3);
  dir_a.at(0, 2) = 1.0;
  dir_a.at(1, 2) = 1.0;
  dir_b.at(0, 0) = 1.0;
  dir_b.at(1, 1) = 1.0;
  ad::Tape t;
  const auto qa = lam.query(t, store, pos, dir_a);
  const auto qb = lam.query(t, store, pos, dir_b);
  for (int i = 0; i < 6; ++i) CHECK(t.val(qa.rgb)[i] == t.val(qb.rgb)[i]);
}

TEST_CASE("factorized density equals the dense grid contraction") {
  const TensorfConfig cfg = tiny_tensorf();
  const TensorfField field{cfg, "g"};
  ad::ParamStore store;
  ad::Rng rng(17);
  field.init(store, rng);

  ad::Rng pts(23);
  const int n = 40;
  ad::Array positions(n, 3);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) positions.at(i, a) = pts.uniform(-0.99, 0.99);
  ad::Tape t;
  const ad::Var g = field.density_factor(t, store, positions);
  for (int i = 0; i < n; ++i) {
    const Vec3 p{positions.at(i, 0), positions.at(i, 1), positions.at(i, 2)};
    CHECK(t.val(g)[static_cast<size_t>(i)] ==
          doctest::Approx(dense_density(store, "g", cfg, cfg.res, p)).epsilon(1e-12));
  }
}

TEST_CASE("points outside the box contribute no density") {
  const TensorfConfig cfg = tiny_tensorf();
  const TensorfField field{cfg, "g"};
  ad::ParamStore store;
  ad::Rng rng(17);
  field.init(store, rng);
  ad::Array positions(2, 3);
  positions.at(0, 0) = 1.5;
  positions.at(1, 2) = -1.2;
  ad::Array viewdirs(2, 3);
  viewdirs.at(0, 2) = 1.0;
  viewdirs.at(1, 2) = 1.0;
  ad::Tape t;
  const TensorfField::Query q = field.query(t, store, positions, viewdirs);
  CHECK(t.val(q.sigma)[0] == 0.0);
  CHECK(t.val(q.sigma)[1] == 0.0);
}

TEST_CASE("linear resampling is endpoint aligned") {
  const ad::Array v = ad::Array({4, 1}, {0.0, 3.0, 6.0, 9.0});
  const ad::Array up = resample_vector(v, 7);
  REQUIRE(up.rows() == 7);
  for (int i = 0; i < 7; ++i) CHECK(up.at(i, 0) == doctest::Approx(1.5 * i));

  ad::Array m(4, 1);
  for (int i = 0; i < 4; ++i) m.at(i, 0) = i;  // plane value = row*2 + col on a 2x2 grid
  const ad::Array up2 = resample_matrix(m, 2, 2, 3, 3);
  REQUIRE(up2.rows() == 9);
  CHECK(up2.at(0, 0) == doctest::Approx(0.0));
  CHECK(up2.at(4, 0) == doctest::Approx(1.5));
  CHECK(up2.at(8, 0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(resample_matrix(m, 3, 2, 4, 4), std::invalid_argument);
}

TEST_CASE("upsampling the factor grids preserves the density field") {
  const TensorfConfig cfg = tiny_tensorf();
  TensorfField field{cfg, "g"};
  ad::ParamStore store;
  ad::Rng rng(31);
  field.init(store, rng);

  ad::Rng pts(37);
  const int n = 25;
  ad::Array positions(n, 3);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) positions.at(i, a) = pts.uniform(-0.95, 0.95);

  std::vector<double> before(n);
  {
    ad::Tape t;
    const ad::Var g = field.density_factor(t, store, positions);
    for (int i = 0; i < n; ++i) before[static_cast<size_t>(i)] = t.val(g)[static_cast<size_t>(i)];
  }

  const std::vector<std::string> touched = field.upsample(store, {7, 7, 7});
  CHECK(touched.size() == 12);
  CHECK(field.current_res(store) == std::array<int, 3>{7, 7, 7});

  ad::Tape t;
  const ad::Var g = field.density_factor(t, store, positions);
  for (int i = 0; i < n; ++i)
    CHECK(t.val(g)[static_cast<size_t>(i)] ==
          doctest::Approx(before[static_cast<size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("constant factor grids have zero smoothness penalty") {
  TensorfConfig cfg = tiny_tensorf();
  const TensorfField field{cfg, "g"};
  ad::ParamStore store;
  ad::Rng rng(41);
  field.init(store, rng);
  for (int a = 0; a < 3; ++a) {
    auto& v = store.at("g.vsig" + std::to_string(a)).value;
    std::fill(v.data.begin(), v.data.end(), 0.3);
    auto& m = store.at("g.msig" + std::to_string(a)).value;
    std::fill(m.data.begin(), m.data.end(), -0.2);
  }
  ad::Tape t;
  CHECK(t.scalar(field.tv_penalty(t, store)) == doctest::Approx(0.0).epsilon(1e-15));

  store.at("g.vsig0").value.at(0, 0) = 5.0;
  ad::Tape t2;
  CHECK(t2.scalar(field.tv_penalty(t2, store)) > 0.0);
}

TEST_CASE("reduced tensor variant shrinks density capacity only") {
  TensorfConfig cfg = tiny_tensorf();
  cfg.rank_sigma = 8;
  cfg.res = {32, 32, 32};
  cfg.bbox = {{-2, -2, -1}, {2, 2, 3}};
  const TensorfConfig aug = make_augmented(cfg, 0.25);
  CHECK(aug.rank_sigma == 4);
  CHECK(aug.rank_color == cfg.rank_color);
  CHECK(aug.res == std::array<int, 3>{8, 8, 8});
  CHECK(aug.bbox.lo.z == doctest::Approx(-1.0 + 0.25 * 4.0));
  CHECK(aug.bbox.hi.z == cfg.bbox.hi.z);
}

TEST_CASE("hash indexing matches wide-integer modular arithmetic") {
  const std::array<uint64_t, 3> primes = {1ull, 2654435761ull, 805459861ull};
  ad::Rng rng(43);
  for (int i = 0; i < 200; ++i) {
    const int64_t x = rng.index(1 << 20), y = rng.index(1 << 20), z = rng.index(1 << 20);
    const uint64_t table = uint64_t{1} << (4 + rng.index(12));
    CHECK(hash_index(x, y, z, primes, table) == hash_oracle(x, y, z, primes, table));
  }
}

TEST_CASE("grid levels grow geometrically and switch to hashing when they outgrow the table") {
  HashGridConfig cfg;
  cfg.levels = 6;
  cfg.base_res = 4;
  cfg.growth = 2.0;
  cfg.table_size = int64_t{1} << 10;
  const HashGridField field{cfg, "h"};
  CHECK(field.level_res(0) == 4);
  CHECK(field.level_res(1) == 8);
  CHECK(field.level_res(3) == 32);
  CHECK(field.level_dense(0));     // 5^3 = 125 rows
  CHECK(field.level_dense(1));     // 9^3 = 729 rows
  CHECK_FALSE(field.level_dense(2));  // 17^3 > 1024
  CHECK(field.level_rows(0) == 125);
  CHECK(field.level_rows(2) == 1024);
}

TEST_CASE("shrinking the table raises collisions on a fixed probe lattice") {
  const std::array<uint64_t, 3> primes = {1ull, 2654435761ull, 805459861ull};
  const int64_t big = hash_collision_count(uint64_t{1} << 12, 16, primes);
  const int64_t small = hash_collision_count(uint64_t{1} << 6, 16, primes);
  CHECK(small > big);
  CHECK(small <= 16 * 16 * 16 - 1);
}

TEST_CASE("reduced hash variant shrinks the table and raises the near window") {
  HashGridConfig cfg;
  cfg.table_size = int64_t{1} << 14;
  const HashGridConfig aug = make_augmented(cfg, 10, 4, 0.3);
  CHECK(aug.table_size == int64_t{1} << 4);
  CHECK(aug.s_near == doctest::Approx(0.3));
  CHECK(aug.levels == cfg.levels);
  const HashGridConfig floored = make_augmented(cfg, 13, 4, 0.3);
  CHECK(floored.table_size == int64_t{1} << 4);
}
