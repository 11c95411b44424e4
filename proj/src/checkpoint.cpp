#include "simplerf/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

namespace simplerf::ad {

namespace {
constexpr char kMagic[8] = {'S', 'R', 'F', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
  T v;
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw std::runtime_error("truncated checkpoint");
  return v;
}
}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::map<std::string, std::string>& meta) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f.write(kMagic, sizeof(kMagic));
  put<uint64_t>(f, store.step_count);
  put<uint32_t>(f, static_cast<uint32_t>(store.count()));

  nlohmann::json manifest;
  manifest["step_count"] = store.step_count;
  manifest["params"] = nlohmann::json::array();
  for (const std::string& name : store.names()) {
    const ParamSlot& slot = store.at(name);
    put<uint32_t>(f, static_cast<uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<uint64_t>(f, static_cast<uint64_t>(slot.value.rows()));
    put<uint64_t>(f, static_cast<uint64_t>(slot.value.cols()));
    f.write(reinterpret_cast<const char*>(slot.value.data.data()),
            static_cast<std::streamsize>(slot.value.data.size() * sizeof(double)));
    manifest["params"].push_back(
        {{"name", name}, {"rows", slot.value.rows()}, {"cols", slot.value.cols()}});
  }
  if (!f) throw std::runtime_error("write failed: " + path);
  f.close();

  manifest["meta"] = meta;
  std::ofstream mf(path + ".json", std::ios::trunc);
  if (!mf) throw std::runtime_error("cannot write manifest: " + path + ".json");
  mf << manifest.dump(2) << "\n";
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read checkpoint: " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);

  LoadedCheckpoint out;
  out.params.step_count = get<uint64_t>(f);
  const uint32_t n = get<uint32_t>(f);
  for (uint32_t i = 0; i < n; ++i) {
    const uint32_t len = get<uint32_t>(f);
    std::string name(len, '\0');
    f.read(name.data(), len);
    const auto rows = static_cast<int64_t>(get<uint64_t>(f));
    const auto cols = static_cast<int64_t>(get<uint64_t>(f));
    Array a(rows, cols);
    f.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(a.data.size() * sizeof(double)));
    if (!f) throw std::runtime_error("truncated checkpoint payload: " + path);
    out.params.create(name, std::move(a));
  }

  std::ifstream mf(path + ".json");
  if (mf) {
    nlohmann::json manifest = nlohmann::json::parse(mf);
    if (manifest.contains("meta"))
      for (auto& [k, v] : manifest["meta"].items()) out.meta[k] = v.get<std::string>();
  }
  return out;
}

}  // namespace simplerf::ad
