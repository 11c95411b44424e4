#include "simplerf/volume.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace simplerf {

double s_from_z(double z, double near, double far) {
  const double dn = 1.0 / near;
  const double df = std::isinf(far) ? 0.0 : 1.0 / far;
  return (dn - 1.0 / z) / (dn - df);
}

double z_from_s(double s, double near, double far) {
  const double dn = 1.0 / near;
  const double df = std::isinf(far) ? 0.0 : 1.0 / far;
  return 1.0 / (dn - s * (dn - df));
}

namespace {

void fill_deltas(SampleSet& set, double near, double far) {
  const double last = (far - near) / static_cast<double>(set.n);
  for (int r = 0; r < set.rays; ++r) {
    for (int j = 0; j + 1 < set.n; ++j)
      set.delta.at(r, j) = set.z.at(r, j + 1) - set.z.at(r, j);
    set.delta.at(r, set.n - 1) = last;
  }
}

}  // namespace

SampleSet sample_stratified(int n_rays, int n, double near, double far, bool in_disparity,
                            double s_lo, bool jitter, ad::Rng* rng) {
  if (n <= 0 || n_rays <= 0) throw std::invalid_argument("sample_stratified: empty request");
  if (!(near > 0.0) || !(far > near)) throw std::invalid_argument("sample_stratified: need 0 < near < far");
  if (s_lo < 0.0 || s_lo >= 1.0) throw std::invalid_argument("sample_stratified: s window start outside [0,1)");
  if (jitter && rng == nullptr) throw std::invalid_argument("sample_stratified: jitter needs an rng");

  const double z_lo = s_lo > 0.0 ? z_from_s(s_lo, near, far) : near;
  SampleSet set;
  set.rays = n_rays;
  set.n = n;
  set.z = ad::Array(n_rays, n);
  set.delta = ad::Array(n_rays, n);
  const double dn = 1.0 / z_lo;
  const double df = 1.0 / far;
  for (int r = 0; r < n_rays; ++r)
    for (int j = 0; j < n; ++j) {
      const double u = jitter ? rng->uniform() : 0.5;
      const double f = (static_cast<double>(j) + u) / static_cast<double>(n);
      set.z.at(r, j) = in_disparity ? 1.0 / (dn + f * (df - dn)) : z_lo + f * (far - z_lo);
    }
  fill_deltas(set, z_lo, far);
  return set;
}

std::vector<double> sample_pdf(const std::vector<double>& z, const std::vector<double>& w, int m,
                               double eps_pdf, bool jitter, ad::Rng* rng) {
  const size_t n = z.size();
  if (n < 2 || w.size() != n) throw std::invalid_argument("sample_pdf: need matching z/w with >= 2 entries");
  if (jitter && rng == nullptr) throw std::invalid_argument("sample_pdf: jitter needs an rng");

  // Bin i surrounds z[i], delimited by midpoints between neighbors.
  std::vector<double> lo(n), hi(n), p(n);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    lo[i] = i == 0 ? z[0] : 0.5 * (z[i - 1] + z[i]);
    hi[i] = i + 1 == n ? z[n - 1] : 0.5 * (z[i] + z[i + 1]);
    p[i] = std::max(w[i], 0.0) + eps_pdf;
    total += p[i];
  }
  std::vector<double> cdf(n + 1, 0.0);
  for (size_t i = 0; i < n; ++i) cdf[i + 1] = cdf[i] + p[i] / total;
  cdf[n] = 1.0;

  std::vector<double> out(static_cast<size_t>(m));
  size_t bin = 0;
  for (int j = 0; j < m; ++j) {
    const double u = (static_cast<double>(j) + (jitter ? rng->uniform() : 0.5)) / static_cast<double>(m);
    while (bin + 1 < n && cdf[bin + 1] <= u) ++bin;
    const double span = cdf[bin + 1] - cdf[bin];
    const double f = span > 0.0 ? (u - cdf[bin]) / span : 0.5;
    out[static_cast<size_t>(j)] = lo[bin] + f * (hi[bin] - lo[bin]);
  }
  return out;
}

SampleSet sample_set_from(const std::vector<std::vector<double>>& z_rows, double near, double far) {
  if (z_rows.empty() || z_rows[0].empty()) throw std::invalid_argument("sample_set_from: empty rows");
  SampleSet set;
  set.rays = static_cast<int>(z_rows.size());
  set.n = static_cast<int>(z_rows[0].size());
  set.z = ad::Array(set.rays, set.n);
  set.delta = ad::Array(set.rays, set.n);
  for (int r = 0; r < set.rays; ++r) {
    if (static_cast<int>(z_rows[static_cast<size_t>(r)].size()) != set.n)
      throw std::invalid_argument("sample_set_from: ragged rows");
    for (int j = 0; j < set.n; ++j) set.z.at(r, j) = z_rows[static_cast<size_t>(r)][static_cast<size_t>(j)];
  }
  fill_deltas(set, near, far);
  return set;
}

SampleSet merge_samples(const SampleSet& coarse, const std::vector<std::vector<double>>& extra,
                        double near, double far) {
  if (static_cast<int>(extra.size()) != coarse.rays)
    throw std::invalid_argument("merge_samples: row count mismatch");
  std::vector<std::vector<double>> rows(static_cast<size_t>(coarse.rays));
  for (int r = 0; r < coarse.rays; ++r) {
    auto& row = rows[static_cast<size_t>(r)];
    row.reserve(static_cast<size_t>(coarse.n) + extra[static_cast<size_t>(r)].size());
    for (int j = 0; j < coarse.n; ++j) row.push_back(coarse.z.at(r, j));
    row.insert(row.end(), extra[static_cast<size_t>(r)].begin(), extra[static_cast<size_t>(r)].end());
    std::sort(row.begin(), row.end());
  }
  return sample_set_from(rows, near, far);
}

ad::Var render_weights(ad::Tape& t, ad::Var sigma, const ad::Array& delta) {
  if (t.shape(sigma) != delta.shape)
    throw std::invalid_argument("render_weights: sigma/delta shape mismatch");
  const ad::Var d = t.constant(delta);
  const ad::Var ds = t.mul(sigma, d);
  const ad::Var transmittance = t.exp(t.neg(t.cumsum_exclusive(ds)));
  const ad::Var absorb = t.affine(t.exp(t.neg(ds)), -1.0, 1.0);  // 1 - exp(-delta*sigma)
  return t.mul(transmittance, absorb);
}

RenderOut composite(ad::Tape& t, ad::Var sigma, ad::Var rgb, const SampleSet& samples,
                    const Vec3& background) {
  const int64_t rays = samples.z.rows();
  const int64_t n = samples.z.cols();
  if (t.shape(rgb).rows != rays * n || t.shape(rgb).cols != 3)
    throw std::invalid_argument("composite: rgb must be [rays*n, 3]");

  RenderOut out;
  out.weights = render_weights(t, sigma, samples.delta);
  out.opacity = t.sum_axis1(out.weights);

  ad::Var channels[3];
  for (int ch = 0; ch < 3; ++ch) {
    const ad::Var c = t.reshape(t.slice_cols(rgb, ch, ch + 1), rays, n);
    ad::Var acc = t.sum_axis1(t.mul(out.weights, c));
    const double bg = background[ch];
    if (bg != 0.0) acc = t.add(acc, t.affine(out.opacity, -bg, bg));
    channels[ch] = acc;
  }
  out.color = t.concat_cols(t.concat_cols(channels[0], channels[1]), channels[2]);
  out.depth = t.sum_axis1(t.mul(out.weights, t.constant(samples.z)));
  out.depth_norm = t.mul(out.depth, t.recip(t.max_const(out.opacity, 1e-6)));
  return out;
}

void sample_positions(const RayBatch& rays, const SampleSet& samples, ad::Array& positions,
                      ad::Array& viewdirs) {
  const int64_t r = static_cast<int64_t>(rays.size());
  if (r != samples.z.rows()) throw std::invalid_argument("sample_positions: ray count mismatch");
  const int64_t n = samples.z.cols();
  positions = ad::Array(r * n, 3);
  viewdirs = ad::Array(r * n, 3);
  for (int64_t i = 0; i < r; ++i) {
    const Ray& ray = rays.rays[static_cast<size_t>(i)];
    for (int64_t j = 0; j < n; ++j) {
      const Vec3 p = ray.o + samples.z.at(i, j) * ray.d;
      const int64_t row = i * n + j;
      positions.at(row, 0) = p.x;
      positions.at(row, 1) = p.y;
      positions.at(row, 2) = p.z;
      viewdirs.at(row, 0) = ray.d.x;
      viewdirs.at(row, 1) = ray.d.y;
      viewdirs.at(row, 2) = ray.d.z;
    }
  }
}

}  // namespace simplerf
