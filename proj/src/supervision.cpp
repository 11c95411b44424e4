#include "simplerf/supervision.hpp"

#include <limits>
#include <stdexcept>

namespace simplerf {

namespace {

double reprojection_error(const Camera& src, const Image& src_img, const Camera& dst,
                          const Image& dst_img, const Pixel& pixel, double depth, int k) {
  if (!(depth > 0.0) || !std::isfinite(depth)) return std::numeric_limits<double>::infinity();
  const PatchSamples reproj = reproject_patch(src, dst, pixel, depth, k, dst_img);
  if (!reproj.valid) return std::numeric_limits<double>::infinity();
  const PatchSamples ref = source_patch(src, pixel, k, src_img);
  return patch_mse(reproj, ref);
}

}  // namespace

MaskPair mask_pair(double e_a, double e_m, double e_tau) {
  MaskPair p;
  p.m_a = e_a <= e_m && e_a <= e_tau ? 1 : 0;
  p.m_m = e_m <= e_a && e_m <= e_tau ? 1 : 0;
  return p;
}

ReliabilityMasks reliability_masks(const std::vector<Pixel>& pixels, const std::vector<double>& z_a,
                                   const std::vector<double>& z_m, const Camera& src,
                                   const Image& src_img, const Camera& dst, const Image& dst_img,
                                   int patch_k, double e_tau) {
  if (pixels.size() != z_a.size() || pixels.size() != z_m.size())
    throw std::invalid_argument("reliability_masks: size mismatch");
  ReliabilityMasks out;
  const size_t n = pixels.size();
  out.e_a.resize(n);
  out.e_m.resize(n);
  out.m_a.resize(n);
  out.m_m.resize(n);
  for (size_t i = 0; i < n; ++i) {
    out.e_a[i] = reprojection_error(src, src_img, dst, dst_img, pixels[i], z_a[i], patch_k);
    out.e_m[i] = reprojection_error(src, src_img, dst, dst_img, pixels[i], z_m[i], patch_k);
    const MaskPair p = mask_pair(out.e_a[i], out.e_m[i], e_tau);
    out.m_a[i] = p.m_a;
    out.m_m[i] = p.m_m;
  }
  return out;
}

namespace {

ad::Var masked_pair_loss(ad::Tape& t, ad::Var supervised_by_a, ad::Var supervised_by_m,
                         const std::vector<uint8_t>& m_a, const std::vector<uint8_t>& m_m) {
  const int64_t r = t.shape(supervised_by_a).rows;
  if (r != static_cast<int64_t>(m_a.size()))
    throw std::invalid_argument("masked loss: mask/batch size mismatch");
  ad::Array ma(r, 1), mm(r, 1);
  for (int64_t i = 0; i < r; ++i) {
    ma[i] = m_a[static_cast<size_t>(i)];
    mm[i] = m_m[static_cast<size_t>(i)];
  }
  const ad::Var term_a =
      t.mul(t.constant(std::move(ma)), t.square(t.sub(supervised_by_a, t.detach(supervised_by_m))));
  const ad::Var term_m =
      t.mul(t.constant(std::move(mm)), t.square(t.sub(t.detach(supervised_by_a), supervised_by_m)));
  return t.mean(t.add(term_a, term_m));
}

}  // namespace

ad::Var loss_augmented_depth(ad::Tape& t, ad::Var z_m, ad::Var z_a, const ReliabilityMasks& masks) {
  // m_a reliable -> z_m learns from sg(z_a); m_m reliable -> z_a learns from sg(z_m).
  return masked_pair_loss(t, z_m, z_a, masks.m_a, masks.m_m);
}

ad::Var loss_coarse_fine(ad::Tape& t, ad::Var z_c, ad::Var z_f, const ReliabilityMasks& masks_cf) {
  // Fine reliable (m_a slot) -> coarse learns; coarse reliable -> fine learns.
  return masked_pair_loss(t, z_c, z_f, masks_cf.m_a, masks_cf.m_m);
}

ad::Var loss_depth_to(ad::Tape& t, ad::Var z, const ad::Array& z_hat) {
  if (t.shape(z).rows != z_hat.rows() || z_hat.cols() != 1)
    throw std::invalid_argument("loss_depth_to: expected matching [K,1] depths");
  return t.mean(t.square(t.sub(z, t.constant(z_hat))));
}

ad::Var loss_sparse_depth(ad::Tape& t, ad::Var z_m, ad::Var z_a, const ad::Array& z_hat) {
  return t.add(loss_depth_to(t, z_m, z_hat), loss_depth_to(t, z_a, z_hat));
}

ad::Var loss_mass_concentration(ad::Tape& t, ad::Var weights, int n_groups, double eps) {
  const ad::Shape ws = t.shape(weights);
  if (n_groups <= 0 || ws.cols < n_groups)
    throw std::invalid_argument("loss_mass_concentration: need 1 <= groups <= samples");
  // 0/1 pooling matrix; the last group takes the remainder.
  const int64_t per = ws.cols / n_groups;
  ad::Array pool(ws.cols, n_groups);
  for (int64_t j = 0; j < ws.cols; ++j) {
    int64_t g = per > 0 ? j / per : 0;
    if (g >= n_groups) g = n_groups - 1;
    pool.at(j, g) = 1.0;
  }
  const ad::Var grouped = t.matmul(weights, t.constant(std::move(pool)));        // [R,G]
  const ad::Var total = t.max_const(t.sum_axis1(weights), eps);                  // [R,1]
  const ad::Var ghat = t.mul(grouped, t.recip(total));
  const ad::Var entropy = t.neg(t.sum_axis1(t.xlogx(ghat)));                     // [R,1]
  return t.mean(entropy);
}

}  // namespace simplerf
