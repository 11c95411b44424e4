#pragma once

#include <cstdint>
#include <vector>

#include "simplerf/scene.hpp"

namespace simplerf {

double mse(const Image& a, const Image& b);

// Peak signal-to-noise ratio in dB for [0,1] images; +inf on identical input.
double psnr(const Image& a, const Image& b);

// Structural similarity on grayscale with a uniform 7x7 window, averaged over
// windows fully inside the image. `ssim` runs separable box sums; the
// reference evaluates every window directly. Keep both: tests cross-check
// them against each other.
double ssim(const Image& a, const Image& b);
double ssim_reference(const Image& a, const Image& b);

// Mean |pred/median(pred) - gt/median(gt)| over masked pixels, medians taken
// over the same mask. Scale-free, so it tolerates global depth gauge drift.
double depth_mae_median_normalized(const DepthMap& pred, const DepthMap& gt,
                                   const std::vector<uint8_t>& mask);

// Spearman rank correlation with mid-ranks on ties; 0 when either input has
// no rank variance.
double srocc(const std::vector<double>& a, const std::vector<double>& b);

// Marks query pixels whose ground-truth surface point is corroborated by at
// least `min_views` training views: the point must project in bounds, in
// front, and within tol_frac * max finite train depth of that view's depth
// map. Infinite depths compare through a 2*far sentinel. Pixels with
// non-finite query depth are never visible.
std::vector<uint8_t> visibility_mask(const View& query, const std::vector<View>& views,
                                     const std::vector<int>& train_ids, double far,
                                     double tol_frac = 0.05, int min_views = 2);

// Fraction of masked pixels rendered well in front of the true surface:
// pred < frac * gt, over masked pixels where both depths are finite. The
// classic floater signature is density hanging in free space before the
// surface, so the test is per pixel against the surface itself.
double floater_fraction(const DepthMap& pred, const DepthMap& gt, const std::vector<uint8_t>& mask,
                        double frac = 0.7);

// Mean image-gradient magnitude across the given views.
double spatial_complexity(const std::vector<View>& views, const std::vector<int>& ids);

double median(std::vector<double> v);

}  // namespace simplerf
