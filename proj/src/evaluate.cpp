#include "simplerf/evaluate.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace simplerf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double psnr_masked(const Image& a, const Image& b, const std::vector<uint8_t>& mask) {
  double acc = 0.0;
  int64_t n = 0;
  for (int r = 0; r < a.height; ++r)
    for (int c = 0; c < a.width; ++c) {
      if (!mask[static_cast<size_t>(r) * a.width + c]) continue;
      for (int ch = 0; ch < 3; ++ch) {
        const double d = a.at(r, c, ch) - b.at(r, c, ch);
        acc += d * d;
      }
      n += 1;
    }
  if (n == 0) return kNaN;
  const double m = acc / (3.0 * static_cast<double>(n));
  if (m <= 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(m);
}

double srocc_depth(const DepthMap& pred, const DepthMap& gt, const std::vector<uint8_t>& mask) {
  std::vector<double> p, g;
  for (size_t i = 0; i < pred.z.size(); ++i) {
    if (!mask[i]) continue;
    if (!std::isfinite(pred.z[i]) || !std::isfinite(gt.z[i])) continue;
    p.push_back(pred.z[i]);
    g.push_back(gt.z[i]);
  }
  if (p.size() < 2) return kNaN;
  return srocc(p, g);
}

double nan_mean(const std::vector<ViewMetrics>& views, double ViewMetrics::* field) {
  double acc = 0.0;
  int n = 0;
  for (const ViewMetrics& v : views) {
    const double x = v.*field;
    if (std::isnan(x)) continue;
    acc += x;
    n += 1;
  }
  return n == 0 ? kNaN : acc / n;
}

nlohmann::json to_json_one(const ViewMetrics& m) {
  auto enc = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  return {{"view", m.view},
          {"psnr", enc(m.psnr_full)},
          {"psnr_masked", enc(m.psnr_masked)},
          {"ssim", enc(m.ssim_full)},
          {"depth_mae", enc(m.depth_mae_full)},
          {"depth_mae_masked", enc(m.depth_mae_masked)},
          {"srocc", enc(m.srocc_full)},
          {"srocc_masked", enc(m.srocc_masked)},
          {"floaters", enc(m.floater_full)},
          {"floaters_masked", enc(m.floater_masked)},
          {"visible_frac", enc(m.visible_frac)}};
}

double dec_num(const nlohmann::json& j) {
  if (j.is_null()) return kNaN;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("eval report: unexpected string value '" + s + "'");
  }
  return j.get<double>();
}

ViewMetrics from_json_one(const nlohmann::json& j) {
  ViewMetrics m;
  m.view = j.at("view").get<int>();
  m.psnr_full = dec_num(j.at("psnr"));
  m.psnr_masked = dec_num(j.at("psnr_masked"));
  m.ssim_full = dec_num(j.at("ssim"));
  m.depth_mae_full = dec_num(j.at("depth_mae"));
  m.depth_mae_masked = dec_num(j.at("depth_mae_masked"));
  m.srocc_full = dec_num(j.at("srocc"));
  m.srocc_masked = dec_num(j.at("srocc_masked"));
  m.floater_full = dec_num(j.at("floaters"));
  m.floater_masked = dec_num(j.at("floaters_masked"));
  m.visible_frac = dec_num(j.at("visible_frac"));
  return m;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "n/a";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string cell(double masked, double full) { return fmt(masked) + " (" + fmt(full) + ")"; }

}  // namespace

EvalReport evaluate(const std::vector<View>& renders, const SceneBundle& bundle,
                    const std::string& backend) {
  if (renders.size() != bundle.test_ids.size())
    throw std::invalid_argument("evaluate: expected one render per test view");

  EvalReport rep;
  rep.scene = bundle.scene_name;
  rep.backend = backend;
  rep.scene_complexity = spatial_complexity(bundle.views, bundle.train_ids);

  std::vector<uint8_t> ones;
  for (size_t i = 0; i < renders.size(); ++i) {
    const int vid = bundle.test_ids[i];
    const View& gt = bundle.views[static_cast<size_t>(vid)];
    const View& rd = renders[i];
    if (rd.image.width != gt.image.width || rd.image.height != gt.image.height)
      throw std::invalid_argument("evaluate: render size mismatch on view " + std::to_string(vid));

    const std::vector<uint8_t> vis =
        visibility_mask(gt, bundle.views, bundle.train_ids, bundle.far);
    ones.assign(vis.size(), 1);

    ViewMetrics m;
    m.view = vid;
    m.psnr_full = psnr(rd.image, gt.image);
    m.psnr_masked = psnr_masked(rd.image, gt.image, vis);
    m.ssim_full = ssim(rd.image, gt.image);
    m.depth_mae_full = depth_mae_median_normalized(rd.depth, gt.depth, ones);
    m.depth_mae_masked = depth_mae_median_normalized(rd.depth, gt.depth, vis);
    m.srocc_full = srocc_depth(rd.depth, gt.depth, ones);
    m.srocc_masked = srocc_depth(rd.depth, gt.depth, vis);
    m.floater_full = floater_fraction(rd.depth, gt.depth, ones);
    m.floater_masked = floater_fraction(rd.depth, gt.depth, vis);
    int64_t nvis = 0;
    for (uint8_t v : vis) nvis += v;
    m.visible_frac = vis.empty() ? kNaN : static_cast<double>(nvis) / vis.size();
    rep.views.push_back(m);
  }

  rep.mean.view = -1;
  rep.mean.psnr_full = nan_mean(rep.views, &ViewMetrics::psnr_full);
  rep.mean.psnr_masked = nan_mean(rep.views, &ViewMetrics::psnr_masked);
  rep.mean.ssim_full = nan_mean(rep.views, &ViewMetrics::ssim_full);
  rep.mean.depth_mae_full = nan_mean(rep.views, &ViewMetrics::depth_mae_full);
  rep.mean.depth_mae_masked = nan_mean(rep.views, &ViewMetrics::depth_mae_masked);
  rep.mean.srocc_full = nan_mean(rep.views, &ViewMetrics::srocc_full);
  rep.mean.srocc_masked = nan_mean(rep.views, &ViewMetrics::srocc_masked);
  rep.mean.floater_full = nan_mean(rep.views, &ViewMetrics::floater_full);
  rep.mean.floater_masked = nan_mean(rep.views, &ViewMetrics::floater_masked);
  rep.mean.visible_frac = nan_mean(rep.views, &ViewMetrics::visible_frac);
  return rep;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["scene"] = scene;
  j["backend"] = backend;
  j["scene_complexity"] = scene_complexity;
  j["views"] = nlohmann::json::array();
  for (const ViewMetrics& m : views) j["views"].push_back(to_json_one(m));
  j["mean"] = to_json_one(mean);
  return j.dump(2);
}

EvalReport eval_report_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    EvalReport rep;
    rep.scene = j.at("scene").get<std::string>();
    rep.backend = j.at("backend").get<std::string>();
    rep.scene_complexity = j.at("scene_complexity").get<double>();
    for (const nlohmann::json& v : j.at("views")) rep.views.push_back(from_json_one(v));
    rep.mean = from_json_one(j.at("mean"));
    return rep;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("eval report: ") + e.what());
  }
}

std::string EvalReport::to_markdown() const {
  std::ostringstream os;
  os << "# " << scene << " / " << backend << "\n\n";
  os << "Masked values first, full-frame in parentheses. Scene complexity " << fmt(scene_complexity)
     << ".\n\n";
  os << "| view | PSNR | SSIM | depth MAE | SROCC | floaters | visible |\n";
  os << "|------|------|------|-----------|-------|----------|--------|\n";
  auto row = [&](const char* label, const ViewMetrics& m) {
    os << "| " << label << " | " << cell(m.psnr_masked, m.psnr_full) << " | " << fmt(m.ssim_full)
       << " | " << cell(m.depth_mae_masked, m.depth_mae_full) << " | "
       << cell(m.srocc_masked, m.srocc_full) << " | " << cell(m.floater_masked, m.floater_full)
       << " | "
       << fmt(m.visible_frac) << " |\n";
  };
  for (const ViewMetrics& m : views) {
    const std::string label = std::to_string(m.view);
    row(label.c_str(), m);
  }
  row("mean", mean);
  return os.str();
}

}  // namespace simplerf
