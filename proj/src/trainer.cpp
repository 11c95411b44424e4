#include "simplerf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "simplerf/checkpoint.hpp"

namespace simplerf {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ad::Var photometric(ad::Tape& t, ad::Var color, const ad::Array& target) {
  return t.mean(t.square(t.sub(color, t.constant(target))));
}

ad::Var gather_tail(ad::Tape& t, ad::Var column, int offset, int count) {
  std::vector<int64_t> rows(static_cast<size_t>(count));
  std::iota(rows.begin(), rows.end(), static_cast<int64_t>(offset));
  return t.gather_rows(column, std::move(rows));
}

std::vector<double> column_values(const ad::Tape& t, ad::Var v) {
  return t.val(v);
}

}  // namespace

std::string LossBreakdown::jsonl() const {
  std::string s = "{\"iter\":" + std::to_string(iteration);
  s += ",\"total\":" + num(total);
  s += ",\"main\":" + num(l_main);
  s += ",\"aug_photo\":" + num(l_aug_photo);
  s += ",\"sd\":" + num(l_sd);
  s += ",\"aug\":" + num(l_aug);
  s += ",\"cfc\":" + num(l_cfc);
  s += ",\"mc\":" + num(l_mc);
  s += ",\"tv\":" + num(l_tv);
  s += "}";
  return s;
}

struct Trainer::Batch {
  RayBatch rays;
  std::vector<int> view;   // bundle view id per ray
  ad::Array target{0, 0};  // [R,3]
  ad::Array kp_depth{0, 0};
  int kp_offset = 0;  // rays at [kp_offset, R) carry sparse depth targets
};

Trainer::Trainer(RunConfig cfg, SceneBundle bundle) : Trainer(std::move(cfg), std::move(bundle), true) {}

Trainer::Trainer(RunConfig cfg, SceneBundle bundle, bool init_params)
    : cfg_(std::move(cfg)), bundle_(std::move(bundle)), rng_(cfg_.seed) {
  cfg_.validate();
  if (bundle_.train_ids.empty()) throw ConfigError("bundle has no training views");
  build();
  if (init_params) {
    if (cfg_.backend == "nerf") {
      nerf_coarse_.init(store_, rng_);
      nerf_fine_.init(store_, rng_);
      if (cfg_.augmentations) {
        nerf_smooth_.init(store_, rng_);
        nerf_lambert_.init(store_, rng_);
      }
    } else if (cfg_.backend == "tensorf") {
      tf_main_.init(store_, rng_);
      if (cfg_.augmentations) tf_aug_.init(store_, rng_);
    } else {
      hg_main_.init(store_, rng_);
      if (cfg_.augmentations) hg_aug_.init(store_, rng_);
    }
  }
}

void Trainer::build() {
  near_ = bundle_.near;
  far_ = bundle_.far;
  activation_iter_ = static_cast<int>(std::lround(cfg_.activation_frac * cfg_.iterations));

  if (cfg_.backend == "nerf") {
    NerfConfig nc;
    nc.l_p = cfg_.pe_position;
    nc.l_v = cfg_.pe_view;
    nc.l_p_smooth = cfg_.pe_position_smooth;
    nc.trunk_layers = cfg_.nerf_trunk_layers;
    nc.trunk_width = cfg_.nerf_trunk_width;
    nc.head_width = cfg_.nerf_head_width;
    nc.sigma_shift = cfg_.nerf_sigma_shift;
    nerf_coarse_ = NerfField{nc, "main"};
    nerf_fine_ = NerfField{nc, "fine"};
    nerf_smooth_ = NerfField{make_augmented(nc, NerfVariant::Smoothing), "augs"};
    nerf_lambert_ = NerfField{make_augmented(nc, NerfVariant::Lambertian), "augl"};
    inference_prefixes_ = {"main.", "fine."};
  } else if (cfg_.backend == "tensorf") {
    TensorfConfig tc;
    tc.rank_sigma = cfg_.tensorf_rank_sigma;
    tc.rank_color = cfg_.tensorf_rank_color;
    tc.feat_dim = cfg_.tensorf_features;
    tc.res = {cfg_.tensorf_res, cfg_.tensorf_res, cfg_.tensorf_res};
    tc.bbox = bundle_.bbox;
    tc.l_v = cfg_.tensorf_pe_view;
    tc.decoder_width = cfg_.tensorf_decoder_width;
    tc.density_activation = cfg_.tensorf_density_activation == "softplus"
                                ? DensityActivation::Softplus
                                : DensityActivation::SigmoidCap;
    tc.density_shift = cfg_.tensorf_density_shift;
    const TensorfConfig aug = make_augmented(tc, cfg_.tensorf_aug_z_raise);

    TensorfConfig start = tc;
    start.res = {cfg_.tensorf_start_res, cfg_.tensorf_start_res, cfg_.tensorf_start_res};
    tf_main_ = TensorfField{start, "main"};
    tf_aug_ = TensorfField{aug, "augt"};
    inference_prefixes_ = {"main."};

    const std::vector<double> fracs = cfg_.upsample_fractions();
    const int m = static_cast<int>(fracs.size());
    for (int k = 0; k < m; ++k) {
      upsample_iters_.push_back(static_cast<int>(std::lround(fracs[static_cast<size_t>(k)] *
                                                             cfg_.iterations)));
      const double grow = static_cast<double>(cfg_.tensorf_res) / cfg_.tensorf_start_res;
      const int res = static_cast<int>(
          std::lround(cfg_.tensorf_start_res * std::pow(grow, static_cast<double>(k + 1) / m)));
      upsample_res_.push_back({res, res, res});
    }
  } else {
    HashGridConfig hc;
    hc.levels = cfg_.hash_levels;
    hc.feat = cfg_.hash_features;
    hc.base_res = cfg_.hash_base_res;
    hc.growth = cfg_.hash_growth;
    hc.table_size = int64_t{1} << cfg_.hash_log2_table;
    hc.bbox = bundle_.bbox;
    hc.l_v = cfg_.pe_view;
    hc.density_width = cfg_.hash_density_width;
    hc.density_out = cfg_.hash_density_out;
    hc.head_width = cfg_.hash_head_width;
    hc.sigma_shift = cfg_.hash_sigma_shift;
    hg_main_ = HashGridField{hc, "main"};
    hg_aug_ = HashGridField{
        make_augmented(hc, cfg_.hash_aug_log2_div, cfg_.hash_aug_min_log2, cfg_.hash_aug_s_near),
        "augh"};
    inference_prefixes_ = {"main."};
  }

  adam_.lr = cfg_.lr0;
  adam_.beta1 = cfg_.adam_beta1;
  adam_.beta2 = cfg_.adam_beta2;
  adam_.eps = cfg_.adam_eps;
  if (cfg_.backend == "tensorf") {
    adam_.set_group("main.dec", cfg_.lr0_decoder);
    adam_.set_group("augt.dec", cfg_.lr0_decoder);
  }

  nearest_train_.assign(bundle_.views.size(), -1);
  for (size_t v = 0; v < bundle_.views.size(); ++v) {
    double best = 0.0;
    int best_id = -1;
    for (int tid : bundle_.train_ids) {
      if (tid == static_cast<int>(v)) continue;
      const Vec3 d = bundle_.views[static_cast<size_t>(tid)].cam.center() -
                     bundle_.views[v].cam.center();
      const double dist = d.dot(d);
      if (best_id < 0 || dist < best) {
        best = dist;
        best_id = tid;
      }
    }
    nearest_train_[v] = best_id;
  }
}

Trainer::Batch Trainer::sample_batch() {
  Batch b;
  const int n_train = static_cast<int>(bundle_.train_ids.size());
  const int kp_total = static_cast<int>(bundle_.keypoints.size());
  const bool want_kp = cfg_.lambda_sd > 0.0 && kp_total > 0 && cfg_.sd_rays_per_batch > 0;
  const int kp_n = want_kp ? cfg_.sd_rays_per_batch : 0;
  const int total = cfg_.rays_per_batch + kp_n;

  b.target = ad::Array(total, 3);
  b.kp_depth = ad::Array(kp_n, 1);
  b.kp_offset = cfg_.rays_per_batch;
  b.rays.rays.reserve(static_cast<size_t>(total));
  b.rays.pixels.reserve(static_cast<size_t>(total));
  b.view.reserve(static_cast<size_t>(total));

  auto push_ray = [&](int vid, int row, int col, int slot) {
    const View& view = bundle_.views[static_cast<size_t>(vid)];
    b.rays.rays.push_back(ray_through(view.cam, row, col));
    b.rays.pixels.push_back(Pixel{row, col});
    b.view.push_back(vid);
    const Vec3 rgb = view.image.get(row, col);
    b.target.at(slot, 0) = rgb.x;
    b.target.at(slot, 1) = rgb.y;
    b.target.at(slot, 2) = rgb.z;
  };

  for (int i = 0; i < cfg_.rays_per_batch; ++i) {
    const int vid = bundle_.train_ids[static_cast<size_t>(rng_.index(n_train))];
    const View& view = bundle_.views[static_cast<size_t>(vid)];
    const int row = static_cast<int>(rng_.index(view.cam.height));
    const int col = static_cast<int>(rng_.index(view.cam.width));
    push_ray(vid, row, col, i);
  }
  for (int i = 0; i < kp_n; ++i) {
    const Keypoint& kp = bundle_.keypoints[static_cast<size_t>(rng_.index(kp_total))];
    push_ray(kp.view, kp.pixel.row, kp.pixel.col, b.kp_offset + i);
    b.kp_depth[i] = kp.depth;
  }
  return b;
}

ReliabilityMasks Trainer::batch_masks(const Batch& b, const std::vector<double>& z_a,
                                      const std::vector<double>& z_m) const {
  const size_t n = b.rays.size();
  ReliabilityMasks all;
  all.e_a.assign(n, std::numeric_limits<double>::infinity());
  all.e_m.assign(n, std::numeric_limits<double>::infinity());
  all.m_a.assign(n, 0);
  all.m_m.assign(n, 0);
  if (!cfg_.use_reliability_masks) {
    std::fill(all.m_a.begin(), all.m_a.end(), uint8_t{1});
    std::fill(all.m_m.begin(), all.m_m.end(), uint8_t{1});
    return all;
  }

  std::map<int, std::vector<size_t>> by_view;
  for (size_t i = 0; i < n; ++i) by_view[b.view[i]].push_back(i);

  for (const auto& [vid, idx] : by_view) {
    const int dst_id = nearest_train_[static_cast<size_t>(vid)];
    if (dst_id < 0) continue;  // no second view to verify against
    std::vector<Pixel> pixels(idx.size());
    std::vector<double> za(idx.size()), zm(idx.size());
    for (size_t j = 0; j < idx.size(); ++j) {
      pixels[j] = b.rays.pixels[idx[j]];
      za[j] = z_a[idx[j]];
      zm[j] = z_m[idx[j]];
    }
    const View& src = bundle_.views[static_cast<size_t>(vid)];
    const View& dst = bundle_.views[static_cast<size_t>(dst_id)];
    const ReliabilityMasks sub = reliability_masks(pixels, za, zm, src.cam, src.image, dst.cam,
                                                   dst.image, cfg_.patch_k, cfg_.e_tau);
    for (size_t j = 0; j < idx.size(); ++j) {
      all.e_a[idx[j]] = sub.e_a[j];
      all.e_m[idx[j]] = sub.e_m[j];
      all.m_a[idx[j]] = sub.m_a[j];
      all.m_m[idx[j]] = sub.m_m[j];
    }
  }
  return all;
}

namespace {

template <class Field>
RenderOut query_and_composite(ad::Tape& t, ad::ParamStore& store, const Field& field,
                              const RayBatch& rays, const SampleSet& samples) {
  ad::Array positions, viewdirs;
  sample_positions(rays, samples, positions, viewdirs);
  const auto q = field.query(t, store, positions, viewdirs);
  const ad::Var sigma = t.reshape(q.sigma, samples.rays, samples.n);
  return composite(t, sigma, q.rgb, samples, Vec3{0, 0, 0});
}

}  // namespace

Trainer::Rendered Trainer::run_nerf(ad::Tape& t, const NerfField& field, const RayBatch& rays,
                                    const SampleSet& samples) {
  return Rendered{query_and_composite(t, store_, field, rays, samples), samples};
}
Trainer::Rendered Trainer::run_tensorf(ad::Tape& t, const TensorfField& field, const RayBatch& rays,
                                       const SampleSet& samples) {
  return Rendered{query_and_composite(t, store_, field, rays, samples), samples};
}
Trainer::Rendered Trainer::run_hashgrid(ad::Tape& t, const HashGridField& field,
                                        const RayBatch& rays, const SampleSet& samples) {
  return Rendered{query_and_composite(t, store_, field, rays, samples), samples};
}

LossBreakdown Trainer::step(int iter) {
  // Grid upsampling happens before the step's graph is built.
  if (cfg_.backend == "tensorf") {
    for (size_t k = 0; k < upsample_iters_.size(); ++k) {
      if (upsample_iters_[k] != iter) continue;
      for (const std::string& name : tf_main_.upsample(store_, upsample_res_[k])) adam_.drop(name);
    }
  }

  Batch b = sample_batch();
  const int total_rays = static_cast<int>(b.rays.size());
  const int kp_n = total_rays - b.kp_offset;
  const bool masks_on = iter >= activation_iter_;
  const bool augs = cfg_.augmentations;

  ad::Tape t;
  struct Term {
    ad::Var v;
    double weight;
    const char* name;
    double* slot;
  };
  std::vector<Term> terms;
  LossBreakdown lb;

  auto add_term = [&](ad::Var v, double weight, const char* name, double* slot) {
    *slot = t.scalar(v);
    terms.push_back(Term{v, weight, name, slot});
  };

  auto sparse_term = [&](std::initializer_list<ad::Var> depths) {
    ad::Var acc{-1};
    for (ad::Var d : depths) {
      const ad::Var l = loss_depth_to(t, gather_tail(t, d, b.kp_offset, kp_n), b.kp_depth);
      acc = acc.ok() ? t.add(acc, l) : l;
    }
    return acc;
  };

  if (cfg_.backend == "nerf") {
    SampleSet coarse = sample_stratified(total_rays, cfg_.n_coarse, near_, far_,
                                         cfg_.sample_disparity, 0.0, cfg_.jitter, &rng_);
    Rendered mc = run_nerf(t, nerf_coarse_, b.rays, coarse);

    const std::vector<double>& wv = t.val(mc.out.weights);
    std::vector<std::vector<double>> extra(static_cast<size_t>(total_rays));
    for (int r = 0; r < total_rays; ++r) {
      std::vector<double> zrow(static_cast<size_t>(cfg_.n_coarse));
      std::vector<double> wrow(static_cast<size_t>(cfg_.n_coarse));
      for (int i = 0; i < cfg_.n_coarse; ++i) {
        zrow[static_cast<size_t>(i)] = mc.samples.z.at(r, i);
        wrow[static_cast<size_t>(i)] = wv[static_cast<size_t>(r * cfg_.n_coarse + i)];
      }
      extra[static_cast<size_t>(r)] =
          sample_pdf(zrow, wrow, cfg_.n_fine, cfg_.eps_pdf, cfg_.jitter, &rng_);
    }
    Rendered mf = run_nerf(t, nerf_fine_, b.rays, merge_samples(mc.samples, extra, near_, far_));

    add_term(t.add(photometric(t, mc.out.color, b.target), photometric(t, mf.out.color, b.target)),
             cfg_.lambda_main, "main", &lb.l_main);

    Rendered as, al;
    if (augs) {
      as = run_nerf(t, nerf_smooth_, b.rays, coarse);
      al = run_nerf(t, nerf_lambert_, b.rays, coarse);
      add_term(t.add(photometric(t, as.out.color, b.target), photometric(t, al.out.color, b.target)),
               cfg_.lambda_aug_photo, "aug_photo", &lb.l_aug_photo);
    }

    if (kp_n > 0) {
      ad::Var sd = augs ? sparse_term({mc.out.depth, mf.out.depth, as.out.depth, al.out.depth})
                        : sparse_term({mc.out.depth, mf.out.depth});
      add_term(sd, cfg_.lambda_sd, "sd", &lb.l_sd);
    }

    if (augs && masks_on && cfg_.lambda_aug > 0.0) {
      const std::vector<double> zm = column_values(t, mc.out.depth_norm);
      const ReliabilityMasks ms = batch_masks(b, column_values(t, as.out.depth_norm), zm);
      const ReliabilityMasks ml = batch_masks(b, column_values(t, al.out.depth_norm), zm);
      add_term(t.add(loss_augmented_depth(t, mc.out.depth, as.out.depth, ms),
                     loss_augmented_depth(t, mc.out.depth, al.out.depth, ml)),
               cfg_.lambda_aug, "aug", &lb.l_aug);
    }
    if (masks_on && cfg_.lambda_cfc > 0.0) {
      const ReliabilityMasks mcf = batch_masks(b, column_values(t, mf.out.depth_norm),
                                               column_values(t, mc.out.depth_norm));
      add_term(loss_coarse_fine(t, mc.out.depth, mf.out.depth, mcf), cfg_.lambda_cfc, "cfc",
               &lb.l_cfc);
    }
  } else if (cfg_.backend == "tensorf") {
    SampleSet s = sample_stratified(total_rays, cfg_.n_samples, near_, far_, cfg_.sample_disparity,
                                    0.0, cfg_.jitter, &rng_);
    Rendered m = run_tensorf(t, tf_main_, b.rays, s);
    add_term(photometric(t, m.out.color, b.target), cfg_.lambda_main, "main", &lb.l_main);

    Rendered a;
    if (augs) {
      a = run_tensorf(t, tf_aug_, b.rays, s);
      add_term(photometric(t, a.out.color, b.target), cfg_.lambda_aug_photo, "aug_photo",
               &lb.l_aug_photo);
    }
    if (kp_n > 0) {
      ad::Var sd = augs ? sparse_term({m.out.depth, a.out.depth}) : sparse_term({m.out.depth});
      add_term(sd, cfg_.lambda_sd, "sd", &lb.l_sd);
    }
    if (augs && masks_on && cfg_.lambda_aug > 0.0) {
      const ReliabilityMasks masks = batch_masks(b, column_values(t, a.out.depth_norm),
                                                 column_values(t, m.out.depth_norm));
      add_term(loss_augmented_depth(t, m.out.depth, a.out.depth, masks), cfg_.lambda_aug, "aug",
               &lb.l_aug);
    }
    if (augs && cfg_.lambda_mc > 0.0)
      add_term(loss_mass_concentration(t, a.out.weights, cfg_.mass_groups), cfg_.lambda_mc, "mc",
               &lb.l_mc);
    if (cfg_.lambda_tv > 0.0) {
      ad::Var tv = tf_main_.tv_penalty(t, store_);
      if (augs) tv = t.add(tv, tf_aug_.tv_penalty(t, store_));
      add_term(tv, cfg_.lambda_tv, "tv", &lb.l_tv);
    }
  } else {
    SampleSet sm = sample_stratified(total_rays, cfg_.n_samples, near_, far_, cfg_.sample_disparity,
                                     hg_main_.cfg.s_near, cfg_.jitter, &rng_);
    Rendered m = run_hashgrid(t, hg_main_, b.rays, sm);
    add_term(photometric(t, m.out.color, b.target), cfg_.lambda_main, "main", &lb.l_main);

    Rendered a;
    if (augs) {
      SampleSet sa = sample_stratified(total_rays, cfg_.n_samples, near_, far_,
                                       cfg_.sample_disparity, hg_aug_.cfg.s_near, cfg_.jitter,
                                       &rng_);
      a = run_hashgrid(t, hg_aug_, b.rays, sa);
      add_term(photometric(t, a.out.color, b.target), cfg_.lambda_aug_photo, "aug_photo",
               &lb.l_aug_photo);
    }
    if (kp_n > 0 && cfg_.lambda_sd > 0.0) {
      ad::Var sd = augs ? sparse_term({m.out.depth, a.out.depth}) : sparse_term({m.out.depth});
      add_term(sd, cfg_.lambda_sd, "sd", &lb.l_sd);
    }
    if (augs && masks_on && cfg_.lambda_aug > 0.0) {
      const ReliabilityMasks masks = batch_masks(b, column_values(t, a.out.depth_norm),
                                                 column_values(t, m.out.depth_norm));
      add_term(loss_augmented_depth(t, m.out.depth, a.out.depth, masks), cfg_.lambda_aug, "aug",
               &lb.l_aug);
    }
  }

  ad::Var total{-1};
  for (const Term& term : terms) {
    if (!std::isfinite(*term.slot))
      throw NumericalError("loss term '" + std::string(term.name) + "' is non-finite at iteration " +
                           std::to_string(iter));
    if (term.weight == 0.0) continue;
    const ad::Var weighted = t.affine(term.v, term.weight, 0.0);
    total = total.ok() ? t.add(total, weighted) : weighted;
  }
  if (!total.ok()) total = t.constant(0.0);
  lb.total = t.scalar(total);

  try {
    t.backward(total);
  } catch (const std::runtime_error& e) {
    throw NumericalError(std::string(e.what()) + " at iteration " + std::to_string(iter));
  }
  const auto u = static_cast<uint64_t>(iter);
  const auto n = static_cast<uint64_t>(cfg_.iterations);
  adam_.lr = ad::exp_decay_lr(cfg_.lr0, cfg_.lr1, u, n);
  if (cfg_.backend == "tensorf") {
    const double dec = ad::exp_decay_lr(cfg_.lr0_decoder, cfg_.lr1_decoder, u, n);
    adam_.set_group("main.dec", dec);
    adam_.set_group("augt.dec", dec);
  }
  ad::adam_step(store_, adam_);
  return lb;
}

std::vector<LossBreakdown> Trainer::train(std::ostream* log) {
  std::vector<LossBreakdown> out;
  out.reserve(static_cast<size_t>(cfg_.iterations));
  for (int iter = 0; iter < cfg_.iterations; ++iter) {
    LossBreakdown lb = step(iter);
    lb.iteration = iter;
    if (log && (iter % cfg_.log_every == 0 || iter + 1 == cfg_.iterations))
      *log << lb.jsonl() << "\n";
    out.push_back(lb);
  }
  return out;
}

View Trainer::render(const Camera& cam, RenderAudit* audit) {
  View view;
  view.cam = cam;
  view.image = Image(cam.width, cam.height);
  view.depth = DepthMap(cam.width, cam.height);

  std::set<std::string> touched;
  int64_t queries = 0;

  constexpr int kChunk = 1024;
  std::vector<Pixel> pixels;
  pixels.reserve(kChunk);
  int done = 0;
  const int total_px = cam.width * cam.height;

  while (done < total_px) {
    pixels.clear();
    const int count = std::min(kChunk, total_px - done);
    for (int i = 0; i < count; ++i)
      pixels.push_back(Pixel{(done + i) / cam.width, (done + i) % cam.width});
    const RayBatch rays = generate_rays(cam, pixels);

    ad::Tape t;
    ad::Var color, depth;
    if (cfg_.backend == "nerf") {
      SampleSet coarse = sample_stratified(count, cfg_.n_coarse, near_, far_,
                                           cfg_.sample_disparity, 0.0, false, nullptr);
      Rendered mc = run_nerf(t, nerf_coarse_, rays, coarse);
      const std::vector<double>& wv = t.val(mc.out.weights);
      std::vector<std::vector<double>> extra(static_cast<size_t>(count));
      for (int r = 0; r < count; ++r) {
        std::vector<double> zrow(static_cast<size_t>(cfg_.n_coarse));
        std::vector<double> wrow(static_cast<size_t>(cfg_.n_coarse));
        for (int i = 0; i < cfg_.n_coarse; ++i) {
          zrow[static_cast<size_t>(i)] = mc.samples.z.at(r, i);
          wrow[static_cast<size_t>(i)] = wv[static_cast<size_t>(r * cfg_.n_coarse + i)];
        }
        extra[static_cast<size_t>(r)] = sample_pdf(zrow, wrow, cfg_.n_fine, cfg_.eps_pdf, false,
                                                   nullptr);
      }
      Rendered mf = run_nerf(t, nerf_fine_, rays, merge_samples(mc.samples, extra, near_, far_));
      color = mf.out.color;
      depth = mf.out.depth;
      queries += static_cast<int64_t>(count) * (cfg_.n_coarse + cfg_.n_coarse + cfg_.n_fine);
    } else if (cfg_.backend == "tensorf") {
      SampleSet s = sample_stratified(count, cfg_.n_samples, near_, far_, cfg_.sample_disparity,
                                      0.0, false, nullptr);
      Rendered m = run_tensorf(t, tf_main_, rays, s);
      color = m.out.color;
      depth = m.out.depth;
      queries += static_cast<int64_t>(count) * cfg_.n_samples;
    } else {
      SampleSet s = sample_stratified(count, cfg_.n_samples, near_, far_, cfg_.sample_disparity,
                                      hg_main_.cfg.s_near, false, nullptr);
      Rendered m = run_hashgrid(t, hg_main_, rays, s);
      color = m.out.color;
      depth = m.out.depth;
      queries += static_cast<int64_t>(count) * cfg_.n_samples;
    }

    const std::vector<double>& cv = t.val(color);
    const std::vector<double>& dv = t.val(depth);
    for (int i = 0; i < count; ++i) {
      const Pixel px = pixels[static_cast<size_t>(i)];
      view.image.set(px.row, px.col,
                     Vec3{cv[static_cast<size_t>(3 * i)], cv[static_cast<size_t>(3 * i + 1)],
                          cv[static_cast<size_t>(3 * i + 2)]});
      view.depth.at(px.row, px.col) = dv[static_cast<size_t>(i)];
    }
    if (audit) {
      for (size_t i = 0; i < t.size(); ++i) {
        const ad::Node& node = t.node(ad::Var{static_cast<int32_t>(i)});
        if (node.param) touched.insert(node.param->name);
      }
    }
    done += count;
  }

  if (audit) {
    audit->queries = queries;
    audit->touched_params.assign(touched.begin(), touched.end());
    audit->param_elements = 0;
    audit->main_only = true;
    for (const std::string& name : audit->touched_params) {
      audit->param_elements += store_.at(name).value.size();
      bool ok = false;
      for (const std::string& p : inference_prefixes_) ok = ok || name.rfind(p, 0) == 0;
      audit->main_only = audit->main_only && ok;
    }
  }
  return view;
}

void Trainer::save(const std::string& path) const {
  std::map<std::string, std::string> meta;
  meta["backend"] = cfg_.backend;
  meta["config"] = dump_config(cfg_);
  meta["scene"] = bundle_.scene_name;
  ad::save_checkpoint(path, store_, meta);
}

Trainer Trainer::load(const std::string& path, SceneBundle bundle) {
  ad::LoadedCheckpoint lc = ad::load_checkpoint(path);
  const auto it = lc.meta.find("config");
  if (it == lc.meta.end()) throw ConfigError("checkpoint missing config metadata: " + path);
  RunConfig cfg = default_config("nerf");
  apply_config_text(cfg, it->second);
  Trainer tr(std::move(cfg), std::move(bundle), false);
  tr.store_ = std::move(lc.params);
  return tr;
}

}  // namespace simplerf
