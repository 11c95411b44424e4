#include "simplerf/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "simplerf/png_io.hpp"

namespace simplerf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string view_name(int i, const char* stem, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d.%s", stem, i, ext);
  return buf;
}

void write_depth(const fs::path& path, const DepthMap& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::vector<float> row(d.z.size());
  for (size_t i = 0; i < d.z.size(); ++i) row[i] = static_cast<float>(d.z[i]);
  out.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
}

DepthMap read_depth(const fs::path& path, int width, int height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  DepthMap d(width, height);
  std::vector<float> raw(d.z.size());
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(raw.size() * sizeof(float)))
    throw std::runtime_error("short depth file: " + path.string());
  for (size_t i = 0; i < raw.size(); ++i) d.z[i] = raw[i];
  return d;
}

json camera_to_json(const Camera& c) {
  json j;
  j["fx"] = c.fx;
  j["fy"] = c.fy;
  j["cx"] = c.cx;
  j["cy"] = c.cy;
  j["width"] = c.width;
  j["height"] = c.height;
  j["near"] = c.near;
  j["far"] = c.far;
  j["pose"] = c.pose.m;
  return j;
}

Camera camera_from_json(const json& j) {
  Camera c;
  c.fx = j.at("fx").get<double>();
  c.fy = j.at("fy").get<double>();
  c.cx = j.at("cx").get<double>();
  c.cy = j.at("cy").get<double>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.near = j.at("near").get<double>();
  c.far = j.at("far").get<double>();
  const auto pose = j.at("pose").get<std::array<double, 16>>();
  c.pose.m = pose;
  c.validate();
  return c;
}

}  // namespace

void save_bundle(const std::string& dir, const SceneBundle& bundle) {
  fs::create_directories(dir);
  const fs::path root(dir);

  json meta;
  meta["scene"] = bundle.scene_name;
  meta["near"] = bundle.near;
  meta["far"] = bundle.far;
  meta["bbox"] = {bundle.bbox.lo.x, bundle.bbox.lo.y, bundle.bbox.lo.z,
                  bundle.bbox.hi.x, bundle.bbox.hi.y, bundle.bbox.hi.z};
  meta["train_ids"] = bundle.train_ids;
  meta["test_ids"] = bundle.test_ids;
  json cams = json::array();
  for (const View& v : bundle.views) cams.push_back(camera_to_json(v.cam));
  meta["cameras"] = cams;
  std::ofstream(root / "cameras.json") << meta.dump(2) << "\n";

  for (size_t i = 0; i < bundle.views.size(); ++i) {
    const View& v = bundle.views[i];
    write_png((root / view_name(static_cast<int>(i), "view", "png")).string(), v.image);
    if (!v.depth.z.empty())
      write_depth(root / view_name(static_cast<int>(i), "depth", "f32"), v.depth);
  }

  json kps = json::array();
  for (const Keypoint& kp : bundle.keypoints) {
    kps.push_back({{"view", kp.view}, {"row", kp.pixel.row}, {"col", kp.pixel.col},
                   {"depth", kp.depth}});
  }
  std::ofstream(root / "keypoints.json") << kps.dump(2) << "\n";
}

SceneBundle load_bundle(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream meta_in(root / "cameras.json");
  if (!meta_in) throw std::runtime_error("missing cameras.json in " + dir);
  json meta = json::parse(meta_in);

  SceneBundle bundle;
  bundle.scene_name = meta.at("scene").get<std::string>();
  bundle.near = meta.at("near").get<double>();
  bundle.far = meta.at("far").get<double>();
  const auto bb = meta.at("bbox").get<std::array<double, 6>>();
  bundle.bbox = BBox{Vec3{bb[0], bb[1], bb[2]}, Vec3{bb[3], bb[4], bb[5]}};
  bundle.train_ids = meta.at("train_ids").get<std::vector<int>>();
  bundle.test_ids = meta.at("test_ids").get<std::vector<int>>();

  const json& cams = meta.at("cameras");
  for (size_t i = 0; i < cams.size(); ++i) {
    View v;
    v.cam = camera_from_json(cams[i]);
    v.image = read_png((root / view_name(static_cast<int>(i), "view", "png")).string());
    if (v.image.width != v.cam.width || v.image.height != v.cam.height)
      throw std::runtime_error("image size mismatch for view " + std::to_string(i));
    v.depth = read_depth(root / view_name(static_cast<int>(i), "depth", "f32"), v.cam.width,
                         v.cam.height);
    bundle.views.push_back(std::move(v));
  }

  std::ifstream kp_in(root / "keypoints.json");
  if (kp_in) {
    json kps = json::parse(kp_in);
    for (const json& j : kps) {
      Keypoint kp;
      kp.view = j.at("view").get<int>();
      kp.pixel = Pixel{j.at("row").get<int>(), j.at("col").get<int>()};
      kp.depth = j.at("depth").get<double>();
      bundle.keypoints.push_back(kp);
    }
  }
  return bundle;
}

}  // namespace simplerf
