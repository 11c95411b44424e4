#pragma once

#include <map>
#include <string>

#include "simplerf/tape.hpp"

namespace simplerf::ad {

// Flat little-endian archive of {name, shape, float64 payload} records plus
// the optimizer step count. A JSON manifest with the same names/shapes and a
// free-form string map of metadata is written next to it as `<path>.json`.
void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::map<std::string, std::string>& meta);

struct LoadedCheckpoint {
  ParamStore params;
  std::map<std::string, std::string> meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace simplerf::ad
