#include "simplerf/gradcheck.hpp"

#include <functional>
#include <numeric>
#include <stdexcept>

#include "simplerf/hashgrid.hpp"
#include "simplerf/nerf.hpp"
#include "simplerf/scene.hpp"
#include "simplerf/supervision.hpp"
#include "simplerf/tensorf.hpp"
#include "simplerf/volume.hpp"

namespace simplerf {

namespace {

struct MicroBatch {
  SceneBundle bundle;
  RayBatch rays;  // 4 image rays then 2 keypoint rays, all from one view
  std::vector<Pixel> pixels;
  ad::Array target{0, 0};
  ad::Array kp_depth{0, 0};
  int kp_offset = 4;
  int src_view = -1;
  int dst_view = -1;
};

MicroBatch micro_batch(uint64_t seed) {
  MicroBatch mb;
  const SceneSpec spec = scene_by_name("plain-box", 16, 3, 1);
  mb.bundle = generate_bundle(spec, 3, 0.6, 0.0, seed);
  mb.src_view = mb.bundle.train_ids[0];
  double best = 0.0;
  for (int tid : mb.bundle.train_ids) {
    if (tid == mb.src_view) continue;
    const Vec3 d = mb.bundle.views[static_cast<size_t>(tid)].cam.center() -
                   mb.bundle.views[static_cast<size_t>(mb.src_view)].cam.center();
    if (mb.dst_view < 0 || d.dot(d) < best) {
      best = d.dot(d);
      mb.dst_view = tid;
    }
  }

  const View& src = mb.bundle.views[static_cast<size_t>(mb.src_view)];
  const std::vector<Pixel> px = {{4, 4}, {4, 11}, {11, 4}, {11, 11}};
  std::vector<Keypoint> kps;
  for (const Keypoint& kp : mb.bundle.keypoints)
    if (kp.view == mb.src_view && kps.size() < 2) kps.push_back(kp);
  if (kps.size() < 2) throw std::runtime_error("micro scene produced too few keypoints");

  const int total = 6;
  mb.target = ad::Array(total, 3);
  mb.kp_depth = ad::Array(2, 1);
  auto push = [&](int row, int col, int slot) {
    mb.rays.rays.push_back(ray_through(src.cam, row, col));
    mb.rays.pixels.push_back(Pixel{row, col});
    mb.pixels.push_back(Pixel{row, col});
    const Vec3 rgb = src.image.get(row, col);
    mb.target.at(slot, 0) = rgb.x;
    mb.target.at(slot, 1) = rgb.y;
    mb.target.at(slot, 2) = rgb.z;
  };
  for (int i = 0; i < 4; ++i) push(px[static_cast<size_t>(i)].row, px[static_cast<size_t>(i)].col, i);
  for (int i = 0; i < 2; ++i) {
    push(kps[static_cast<size_t>(i)].pixel.row, kps[static_cast<size_t>(i)].pixel.col, 4 + i);
    mb.kp_depth[i] = kps[static_cast<size_t>(i)].depth;
  }
  return mb;
}

template <class Field>
RenderOut run_field(ad::Tape& t, ad::ParamStore& store, const Field& field, const RayBatch& rays,
                    const SampleSet& samples) {
  ad::Array positions, viewdirs;
  sample_positions(rays, samples, positions, viewdirs);
  const auto q = field.query(t, store, positions, viewdirs);
  return composite(t, t.reshape(q.sigma, samples.rays, samples.n), q.rgb, samples, Vec3{0, 0, 0});
}

// Moves every parameter to a generic point. Fresh inits sit in degenerate
// spots for finite differences: hash tables start at 1e-4 scale and biases at
// zero, which parks ReLU preactivations on their kink.
void jitter_params(ad::ParamStore& store, ad::Rng& rng, double s) {
  for (const std::string& name : store.names())
    for (double& v : store.at(name).value.data) v += rng.normal(0.0, s);
}

// Finite-difference target for the stop-gradient pair losses: each detached
// side is pinned to its value at the center point, so the probe's derivative
// matches what backward computes on the live loss. Splitting by gate reuses
// the production loss for both halves.
template <class LossFn>
ad::Var frozen_pair(ad::Tape& t, const LossFn& loss, ad::Var first, const ad::Array& first0,
                    ad::Var second, const ad::Array& second0, const ReliabilityMasks& masks) {
  ReliabilityMasks first_learns = masks;
  std::fill(first_learns.m_m.begin(), first_learns.m_m.end(), uint8_t{0});
  ReliabilityMasks second_learns = masks;
  std::fill(second_learns.m_a.begin(), second_learns.m_a.end(), uint8_t{0});
  return t.add(loss(t, first, t.constant(second0), first_learns),
               loss(t, t.constant(first0), second, second_learns));
}

// Masks are fixed inputs to the losses, so they are computed once from the
// initial parameters. A huge gate keeps roughly half the rays on each side
// instead of zeroing everything on an untrained model.
template <class FieldA, class FieldM>
ReliabilityMasks frozen_masks(ad::ParamStore& store, const MicroBatch& mb, const FieldA& aug,
                              const SampleSet& sa, const FieldM& main, const SampleSet& sm) {
  ad::Tape t;
  const RenderOut ra = run_field(t, store, aug, mb.rays, sa);
  const RenderOut rm = run_field(t, store, main, mb.rays, sm);
  const View& src = mb.bundle.views[static_cast<size_t>(mb.src_view)];
  const View& dst = mb.bundle.views[static_cast<size_t>(mb.dst_view)];
  ReliabilityMasks masks = reliability_masks(mb.pixels, t.val(ra.depth_norm), t.val(rm.depth_norm),
                                             src.cam, src.image, dst.cam, dst.image, 3, 1e9);
  const bool any = std::accumulate(masks.m_a.begin(), masks.m_a.end(), 0) +
                       std::accumulate(masks.m_m.begin(), masks.m_m.end(), 0) >
                   0;
  if (!any) {
    std::fill(masks.m_a.begin(), masks.m_a.end(), uint8_t{1});
    std::fill(masks.m_m.begin(), masks.m_m.end(), uint8_t{1});
  }
  return masks;
}

ad::Var photo(ad::Tape& t, ad::Var color, const ad::Array& target) {
  return t.mean(t.square(t.sub(color, t.constant(target))));
}

ad::Var kp_tail(ad::Tape& t, ad::Var depth, const MicroBatch& mb) {
  std::vector<int64_t> rows = {4, 5};
  return loss_depth_to(t, t.gather_rows(depth, rows), mb.kp_depth);
}

// Builders receive fd_probe = true when evaluating a finite-difference point,
// where stop-gradient losses must substitute their frozen targets.
using Builder = std::function<ad::Var(ad::Tape&, bool fd_probe)>;

std::vector<GradcheckCase> run_cases(
    ad::ParamStore& store, double tol,
    const std::vector<std::pair<std::string, Builder>>& builders) {
  std::vector<GradcheckCase> out;
  for (const auto& [name, build] : builders) {
    auto loss_fn = [&build](bool with_grad) -> double {
      ad::Tape t;
      const ad::Var l = build(t, !with_grad);
      const double v = t.scalar(l);
      if (with_grad) t.backward(l);
      return v;
    };
    out.push_back(GradcheckCase{name, ad::gradcheck(loss_fn, store, tol)});
  }
  return out;
}

std::vector<GradcheckCase> suite_nerf(const MicroBatch& mb, double tol, uint64_t seed) {
  NerfConfig nc;
  nc.l_p = 2;
  nc.l_v = 1;
  nc.l_p_smooth = 1;
  nc.trunk_layers = 2;
  nc.trunk_width = 8;
  nc.head_width = 8;
  const NerfField coarse{nc, "main"};
  const NerfField fine{nc, "fine"};
  const NerfField smooth{make_augmented(nc, NerfVariant::Smoothing), "augs"};
  const NerfField lambert{make_augmented(nc, NerfVariant::Lambertian), "augl"};

  ad::ParamStore store;
  ad::Rng rng(seed);
  coarse.init(store, rng);
  fine.init(store, rng);
  smooth.init(store, rng);
  lambert.init(store, rng);
  jitter_params(store, rng, 0.05);

  const int n_rays = static_cast<int>(mb.rays.size());
  const double near = mb.bundle.near, far = mb.bundle.far;
  ad::Rng srng(seed + 1);
  const SampleSet sc = sample_stratified(n_rays, 6, near, far, false, 0.0, true, &srng);

  SampleSet sf;
  {
    ad::Tape t;
    const RenderOut rc = run_field(t, store, coarse, mb.rays, sc);
    const std::vector<double>& wv = t.val(rc.weights);
    std::vector<std::vector<double>> extra(static_cast<size_t>(n_rays));
    for (int r = 0; r < n_rays; ++r) {
      std::vector<double> zr(6), wr(6);
      for (int i = 0; i < 6; ++i) {
        zr[static_cast<size_t>(i)] = sc.z.at(r, i);
        wr[static_cast<size_t>(i)] = wv[static_cast<size_t>(r * 6 + i)];
      }
      extra[static_cast<size_t>(r)] = sample_pdf(zr, wr, 6, 1e-5, false, nullptr);
    }
    sf = merge_samples(sc, extra, near, far);
  }

  const ReliabilityMasks ms = frozen_masks(store, mb, smooth, sc, coarse, sc);
  const ReliabilityMasks ml = frozen_masks(store, mb, lambert, sc, coarse, sc);
  ReliabilityMasks mcf;
  ad::Array zc0, zf0, zs0, zl0;
  {
    ad::Tape t;
    const RenderOut rc = run_field(t, store, coarse, mb.rays, sc);
    const RenderOut rf = run_field(t, store, fine, mb.rays, sf);
    const RenderOut rs = run_field(t, store, smooth, mb.rays, sc);
    const RenderOut rl = run_field(t, store, lambert, mb.rays, sc);
    const View& src = mb.bundle.views[static_cast<size_t>(mb.src_view)];
    const View& dst = mb.bundle.views[static_cast<size_t>(mb.dst_view)];
    mcf = reliability_masks(mb.pixels, t.val(rf.depth_norm), t.val(rc.depth_norm), src.cam,
                            src.image, dst.cam, dst.image, 3, 1e9);
    zc0 = t.array(rc.depth);
    zf0 = t.array(rf.depth);
    zs0 = t.array(rs.depth);
    zl0 = t.array(rl.depth);
  }

  std::vector<std::pair<std::string, Builder>> builders;
  builders.emplace_back("nerf/main_photo", [&](ad::Tape& t, bool) {
    const RenderOut rc = run_field(t, store, coarse, mb.rays, sc);
    const RenderOut rf = run_field(t, store, fine, mb.rays, sf);
    return t.add(photo(t, rc.color, mb.target), photo(t, rf.color, mb.target));
  });
  builders.emplace_back("nerf/aug_photo", [&](ad::Tape& t, bool) {
    const RenderOut rs = run_field(t, store, smooth, mb.rays, sc);
    const RenderOut rl = run_field(t, store, lambert, mb.rays, sc);
    return t.add(photo(t, rs.color, mb.target), photo(t, rl.color, mb.target));
  });
  builders.emplace_back("nerf/sparse_depth", [&](ad::Tape& t, bool) {
    const RenderOut rc = run_field(t, store, coarse, mb.rays, sc);
    const RenderOut rf = run_field(t, store, fine, mb.rays, sf);
    const RenderOut rs = run_field(t, store, smooth, mb.rays, sc);
    const RenderOut rl = run_field(t, store, lambert, mb.rays, sc);
    return t.add(t.add(kp_tail(t, rc.depth, mb), kp_tail(t, rf.depth, mb)),
                 t.add(kp_tail(t, rs.depth, mb), kp_tail(t, rl.depth, mb)));
  });
  builders.emplace_back("nerf/masked_aug_depth", [&](ad::Tape& t, bool fd_probe) {
    const RenderOut rc = run_field(t, store, coarse, mb.rays, sc);
    const RenderOut rs = run_field(t, store, smooth, mb.rays, sc);
    const RenderOut rl = run_field(t, store, lambert, mb.rays, sc);
    if (!fd_probe)
      return t.add(loss_augmented_depth(t, rc.depth, rs.depth, ms),
                   loss_augmented_depth(t, rc.depth, rl.depth, ml));
    return t.add(frozen_pair(t, loss_augmented_depth, rc.depth, zc0, rs.depth, zs0, ms),
                 frozen_pair(t, loss_augmented_depth, rc.depth, zc0, rl.depth, zl0, ml));
  });
  builders.emplace_back("nerf/coarse_fine", [&](ad::Tape& t, bool fd_probe) {
    const RenderOut rc = run_field(t, store, coarse, mb.rays, sc);
    const RenderOut rf = run_field(t, store, fine, mb.rays, sf);
    if (!fd_probe) return loss_coarse_fine(t, rc.depth, rf.depth, mcf);
    return frozen_pair(t, loss_coarse_fine, rc.depth, zc0, rf.depth, zf0, mcf);
  });
  return run_cases(store, tol, builders);
}

std::vector<GradcheckCase> suite_tensorf(const MicroBatch& mb, double tol, uint64_t seed) {
  TensorfConfig tc;
  tc.rank_sigma = 2;
  tc.rank_color = 3;
  tc.feat_dim = 4;
  tc.res = {8, 8, 8};
  tc.bbox = mb.bundle.bbox;
  tc.l_v = 0;
  tc.decoder_width = 8;
  const TensorfField main{tc, "main"};
  const TensorfField aug{make_augmented(tc, 0.25), "augt"};

  ad::ParamStore store;
  ad::Rng rng(seed);
  main.init(store, rng);
  aug.init(store, rng);
  jitter_params(store, rng, 0.05);

  const int n_rays = static_cast<int>(mb.rays.size());
  ad::Rng srng(seed + 1);
  const SampleSet s =
      sample_stratified(n_rays, 8, mb.bundle.near, mb.bundle.far, false, 0.0, true, &srng);
  const ReliabilityMasks masks = frozen_masks(store, mb, aug, s, main, s);
  ad::Array zm0, za0;
  {
    ad::Tape t;
    zm0 = t.array(run_field(t, store, main, mb.rays, s).depth);
    za0 = t.array(run_field(t, store, aug, mb.rays, s).depth);
  }

  std::vector<std::pair<std::string, Builder>> builders;
  builders.emplace_back("tensorf/main_photo", [&](ad::Tape& t, bool) {
    return photo(t, run_field(t, store, main, mb.rays, s).color, mb.target);
  });
  builders.emplace_back("tensorf/aug_photo", [&](ad::Tape& t, bool) {
    return photo(t, run_field(t, store, aug, mb.rays, s).color, mb.target);
  });
  builders.emplace_back("tensorf/sparse_depth", [&](ad::Tape& t, bool) {
    return t.add(kp_tail(t, run_field(t, store, main, mb.rays, s).depth, mb),
                 kp_tail(t, run_field(t, store, aug, mb.rays, s).depth, mb));
  });
  builders.emplace_back("tensorf/masked_aug_depth", [&](ad::Tape& t, bool fd_probe) {
    const RenderOut rm = run_field(t, store, main, mb.rays, s);
    const RenderOut ra = run_field(t, store, aug, mb.rays, s);
    if (!fd_probe) return loss_augmented_depth(t, rm.depth, ra.depth, masks);
    return frozen_pair(t, loss_augmented_depth, rm.depth, zm0, ra.depth, za0, masks);
  });
  builders.emplace_back("tensorf/mass_concentration", [&](ad::Tape& t, bool) {
    return loss_mass_concentration(t, run_field(t, store, aug, mb.rays, s).weights, 3);
  });
  builders.emplace_back("tensorf/tv", [&](ad::Tape& t, bool) {
    return t.add(main.tv_penalty(t, store), aug.tv_penalty(t, store));
  });
  return run_cases(store, tol, builders);
}

std::vector<GradcheckCase> suite_hashgrid(const MicroBatch& mb, double tol, uint64_t seed) {
  HashGridConfig hc;
  hc.levels = 2;
  hc.feat = 2;
  hc.base_res = 4;
  hc.growth = 1.5;
  hc.table_size = int64_t{1} << 6;
  hc.bbox = mb.bundle.bbox;
  hc.l_v = 1;
  hc.density_width = 8;
  hc.density_out = 4;
  hc.head_width = 8;
  const HashGridField main{hc, "main"};
  const HashGridField aug{make_augmented(hc, 2, 4, 0.3), "augh"};

  ad::ParamStore store;
  ad::Rng rng(seed);
  main.init(store, rng);
  aug.init(store, rng);
  jitter_params(store, rng, 0.05);

  const int n_rays = static_cast<int>(mb.rays.size());
  ad::Rng srng(seed + 1);
  const SampleSet sm = sample_stratified(n_rays, 8, mb.bundle.near, mb.bundle.far, false,
                                         main.cfg.s_near, true, &srng);
  const SampleSet sa = sample_stratified(n_rays, 8, mb.bundle.near, mb.bundle.far, false,
                                         aug.cfg.s_near, true, &srng);
  const ReliabilityMasks masks = frozen_masks(store, mb, aug, sa, main, sm);
  ad::Array zm0, za0;
  {
    ad::Tape t;
    zm0 = t.array(run_field(t, store, main, mb.rays, sm).depth);
    za0 = t.array(run_field(t, store, aug, mb.rays, sa).depth);
  }

  std::vector<std::pair<std::string, Builder>> builders;
  builders.emplace_back("hashgrid/main_photo", [&](ad::Tape& t, bool) {
    return photo(t, run_field(t, store, main, mb.rays, sm).color, mb.target);
  });
  builders.emplace_back("hashgrid/aug_photo", [&](ad::Tape& t, bool) {
    return photo(t, run_field(t, store, aug, mb.rays, sa).color, mb.target);
  });
  builders.emplace_back("hashgrid/sparse_depth", [&](ad::Tape& t, bool) {
    return t.add(kp_tail(t, run_field(t, store, main, mb.rays, sm).depth, mb),
                 kp_tail(t, run_field(t, store, aug, mb.rays, sa).depth, mb));
  });
  builders.emplace_back("hashgrid/masked_aug_depth", [&](ad::Tape& t, bool fd_probe) {
    const RenderOut rm = run_field(t, store, main, mb.rays, sm);
    const RenderOut ra = run_field(t, store, aug, mb.rays, sa);
    if (!fd_probe) return loss_augmented_depth(t, rm.depth, ra.depth, masks);
    return frozen_pair(t, loss_augmented_depth, rm.depth, zm0, ra.depth, za0, masks);
  });
  return run_cases(store, tol, builders);
}

}  // namespace

std::vector<GradcheckCase> gradcheck_suite(const std::string& backend, double tol, uint64_t seed) {
  const MicroBatch mb = micro_batch(seed);
  if (backend == "nerf") return suite_nerf(mb, tol, seed);
  if (backend == "tensorf") return suite_tensorf(mb, tol, seed);
  if (backend == "hashgrid") return suite_hashgrid(mb, tol, seed);
  throw std::invalid_argument("unknown backend: " + backend);
}

}  // namespace simplerf
