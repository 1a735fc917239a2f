#pragma once

#include <filesystem>
#include <map>

#include "gsmn/io/binary.hpp"
#include "gsmn/model/net.hpp"

namespace gsmn::io {

inline constexpr char kCheckpointMagic[8] = {'G', 'S', 'C', 'K', 'P', 'T', '0', '1'};

// Versioned container: string metadata plus name -> shape-tagged f32 arrays.
// Parameters are written in name order, so save -> load -> save is
// byte-identical.
template <typename T>
void save_checkpoint(model::PolicyNet<T>& net, const std::filesystem::path& path,
                     std::map<std::string, std::string> meta = {}) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "save_checkpoint: cannot open " + path.string());
  out.write(kCheckpointMagic, 8);
  meta["kind"] = model::kind_name(net.config().kind);
  put_u32(out, uint32_t(meta.size()));
  for (const auto& [k, v] : meta) {
    put_string(out, k);
    put_string(out, v);
  }
  auto params = net.parameters();
  std::sort(params.begin(), params.end(),
            [](const auto* a, const auto* b) { return a->name < b->name; });
  put_u32(out, uint32_t(params.size()));
  for (const auto* p : params) {
    put_string(out, p->name);
    put_u32(out, 0);  // dtype tag: f32
    put_u32(out, uint32_t(p->value.ndim()));
    for (int d : p->value.shape()) put_u32(out, uint32_t(d));
    for (size_t i = 0; i < p->value.numel(); ++i) put_f32(out, float(p->value[i]));
  }
  require(out.good(), "save_checkpoint: write failed");
}

// Loads into an already-constructed net; every array must match the
// configured shape exactly.
template <typename T>
std::map<std::string, std::string> load_checkpoint(model::PolicyNet<T>& net,
                                                   const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw DataError("load_checkpoint: cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  require(bool(in) && std::memcmp(magic, kCheckpointMagic, 8) == 0,
          "load_checkpoint: bad magic or version in " + path.string());
  std::map<std::string, std::string> meta;
  const uint32_t n_meta = get_u32(in);
  for (uint32_t i = 0; i < n_meta; ++i) {
    std::string k = get_string(in);
    meta[k] = get_string(in);
  }
  if (meta.count("kind"))
    require(meta.at("kind") == model::kind_name(net.config().kind),
            "load_checkpoint: checkpoint kind " + meta.at("kind") + " does not match the configured model");
  const uint32_t n_params = get_u32(in);
  size_t loaded = 0;
  for (uint32_t i = 0; i < n_params; ++i) {
    const std::string name = get_string(in);
    require(get_u32(in) == 0, "load_checkpoint: unsupported dtype for " + name);
    const uint32_t ndim = get_u32(in);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = int(get_u32(in));
    auto& p = net.param(name);  // throws on unknown name
    require(p.value.shape() == shape, "load_checkpoint: shape mismatch for " + name);
    for (size_t j = 0; j < p.value.numel(); ++j) p.value[j] = T(get_f32(in));
    ++loaded;
  }
  require(loaded == net.parameters().size(),
          "load_checkpoint: parameter count mismatch (config/checkpoint shape disagreement)");
  return meta;
}

}  // namespace gsmn::io
