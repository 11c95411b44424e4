#include "simplerf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace simplerf {

namespace {

constexpr int kWin = 7;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_same_size(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.width == 0 || a.height == 0)
    throw std::invalid_argument("image size mismatch");
}

// Sliding box sum along rows then columns, output (H-kWin+1) x (W-kWin+1).
std::vector<double> box_sum(const std::vector<double>& src, int h, int w) {
  const int ow = w - kWin + 1;
  const int oh = h - kWin + 1;
  std::vector<double> rows(static_cast<size_t>(h) * ow);
  for (int r = 0; r < h; ++r) {
    double acc = 0;
    for (int c = 0; c < kWin; ++c) acc += src[static_cast<size_t>(r) * w + c];
    rows[static_cast<size_t>(r) * ow] = acc;
    for (int c = 1; c < ow; ++c) {
      acc += src[static_cast<size_t>(r) * w + c + kWin - 1] - src[static_cast<size_t>(r) * w + c - 1];
      rows[static_cast<size_t>(r) * ow + c] = acc;
    }
  }
  std::vector<double> out(static_cast<size_t>(oh) * ow);
  for (int c = 0; c < ow; ++c) {
    double acc = 0;
    for (int r = 0; r < kWin; ++r) acc += rows[static_cast<size_t>(r) * ow + c];
    out[c] = acc;
    for (int r = 1; r < oh; ++r) {
      acc += rows[static_cast<size_t>(r + kWin - 1) * ow + c] - rows[static_cast<size_t>(r - 1) * ow + c];
      out[static_cast<size_t>(r) * ow + c] = acc;
    }
  }
  return out;
}

double ssim_from_moments(double sa, double sb, double saa, double sbb, double sab) {
  constexpr double n = kWin * kWin;
  const double mu_a = sa / n;
  const double mu_b = sb / n;
  const double var_a = saa / n - mu_a * mu_a;
  const double var_b = sbb / n - mu_b * mu_b;
  const double cov = sab / n - mu_a * mu_b;
  return (2 * mu_a * mu_b + kC1) * (2 * cov + kC2) /
         ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
}

}  // namespace

double mse(const Image& a, const Image& b) {
  check_same_size(a, b);
  double acc = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

double psnr(const Image& a, const Image& b) {
  const double e = mse(a, b);
  if (e == 0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(e);
}

double ssim(const Image& a, const Image& b) {
  check_same_size(a, b);
  if (a.width < kWin || a.height < kWin) throw std::invalid_argument("image smaller than ssim window");
  const std::vector<double> ga = to_grayscale(a);
  const std::vector<double> gb = to_grayscale(b);
  const size_t n = ga.size();
  std::vector<double> gaa(n), gbb(n), gab(n);
  for (size_t i = 0; i < n; ++i) {
    gaa[i] = ga[i] * ga[i];
    gbb[i] = gb[i] * gb[i];
    gab[i] = ga[i] * gb[i];
  }
  const auto sa = box_sum(ga, a.height, a.width);
  const auto sb = box_sum(gb, a.height, a.width);
  const auto saa = box_sum(gaa, a.height, a.width);
  const auto sbb = box_sum(gbb, a.height, a.width);
  const auto sab = box_sum(gab, a.height, a.width);
  double acc = 0;
  for (size_t i = 0; i < sa.size(); ++i)
    acc += ssim_from_moments(sa[i], sb[i], saa[i], sbb[i], sab[i]);
  return acc / static_cast<double>(sa.size());
}

double ssim_reference(const Image& a, const Image& b) {
  check_same_size(a, b);
  if (a.width < kWin || a.height < kWin) throw std::invalid_argument("image smaller than ssim window");
  const std::vector<double> ga = to_grayscale(a);
  const std::vector<double> gb = to_grayscale(b);
  double acc = 0;
  int count = 0;
  for (int r = 0; r + kWin <= a.height; ++r) {
    for (int c = 0; c + kWin <= a.width; ++c) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = 0; i < kWin; ++i) {
        for (int j = 0; j < kWin; ++j) {
          const double va = ga[static_cast<size_t>(r + i) * a.width + c + j];
          const double vb = gb[static_cast<size_t>(r + i) * a.width + c + j];
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
        }
      }
      acc += ssim_from_moments(sa, sb, saa, sbb, sab);
      ++count;
    }
  }
  return acc / count;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double depth_mae_median_normalized(const DepthMap& pred, const DepthMap& gt,
                                   const std::vector<uint8_t>& mask) {
  if (pred.z.size() != gt.z.size() || mask.size() != gt.z.size())
    throw std::invalid_argument("depth size mismatch");
  std::vector<double> ps, gs;
  for (size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    if (!std::isfinite(pred.z[i]) || !std::isfinite(gt.z[i])) continue;
    ps.push_back(pred.z[i]);
    gs.push_back(gt.z[i]);
  }
  if (ps.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double mp = median(ps);
  const double mg = median(gs);
  if (!(mp > 0) || !(mg > 0)) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0;
  for (size_t i = 0; i < ps.size(); ++i) acc += std::abs(ps[i] / mp - gs[i] / mg);
  return acc / static_cast<double>(ps.size());
}

namespace {

std::vector<double> mid_ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double srocc(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("srocc size mismatch");
  if (a.size() < 2) return 0.0;
  const std::vector<double> ra = mid_ranks(a);
  const std::vector<double> rb = mid_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0, va = 0, vb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va <= 0 || vb <= 0) return 0.0;
  return num / std::sqrt(va * vb);
}

std::vector<uint8_t> visibility_mask(const View& query, const std::vector<View>& views,
                                     const std::vector<int>& train_ids, double far,
                                     double tol_frac, int min_views) {
  const int w = query.cam.width;
  const int h = query.cam.height;
  std::vector<uint8_t> mask(static_cast<size_t>(w) * h, 0);
  if (query.depth.z.empty()) return mask;

  const double sentinel = 2.0 * far;
  struct TrainView {
    const View* view;
    DepthMap sane;
    double tol;
  };
  std::vector<TrainView> trains;
  for (int id : train_ids) {
    const View& tv = views[static_cast<size_t>(id)];
    if (tv.depth.z.empty()) continue;
    TrainView entry{&tv, tv.depth, 0.0};
    double max_depth = 0;
    for (double& z : entry.sane.z) {
      if (!std::isfinite(z)) z = sentinel;
      else max_depth = std::max(max_depth, z);
    }
    entry.tol = tol_frac * max_depth;
    trains.push_back(std::move(entry));
  }

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double z = query.depth.at(r, c);
      if (!std::isfinite(z)) continue;
      const Ray ray = ray_through(query.cam, r, c);
      const Vec3 p = ray.at(z);
      int hits = 0;
      for (const TrainView& tv : trains) {
        const Projection proj = project(tv.view->cam, p);
        if (!proj.in_front) continue;
        if (!tv.view->image.in_bounds_bilinear(proj.v, proj.u)) continue;
        const double d_train = tv.sane.bilinear_clamped(proj.v, proj.u);
        if (std::abs(proj.depth - d_train) <= tv.tol) ++hits;
      }
      if (hits >= min_views) mask[static_cast<size_t>(r) * w + c] = 1;
    }
  }
  return mask;
}

double floater_fraction(const DepthMap& pred, const DepthMap& gt, const std::vector<uint8_t>& mask,
                        double frac) {
  if (mask.size() != pred.z.size() || mask.size() != gt.z.size())
    throw std::invalid_argument("mask size mismatch");
  size_t counted = 0, floaters = 0;
  for (size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i] || !std::isfinite(pred.z[i]) || !std::isfinite(gt.z[i])) continue;
    ++counted;
    if (pred.z[i] < frac * gt.z[i]) ++floaters;
  }
  if (counted == 0) return 0.0;
  return static_cast<double>(floaters) / static_cast<double>(counted);
}

double spatial_complexity(const std::vector<View>& views, const std::vector<int>& ids) {
  if (ids.empty()) return 0.0;
  double acc = 0;
  for (int id : ids) {
    const std::vector<double> mag = gradient_magnitude(views[static_cast<size_t>(id)].image);
    double view_acc = 0;
    for (double g : mag) view_acc += g;
    acc += view_acc / static_cast<double>(mag.size());
  }
  return acc / static_cast<double>(ids.size());
}

}  // namespace simplerf
