#pragma once

#include <string>

#include "simplerf/scene.hpp"

namespace simplerf {

// On-disk layout under `dir`:
//   cameras.json            rig, split, bounds
//   view_0000.png ...       8-bit RGB
//   depth_0000.f32 ...      float32 LE, row-major, one value per pixel
//   keypoints.json          sparse depth annotations on train views
void save_bundle(const std::string& dir, const SceneBundle& bundle);

// Depth maps and keypoints are optional on disk; missing files load as empty.
SceneBundle load_bundle(const std::string& dir);

}  // namespace simplerf
