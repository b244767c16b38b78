// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmsf/net/checkpoint.hpp"
#include "mmsf/net/model.hpp"

namespace mmsf::net {

namespace {

constexpr char kMagic[8] = {'M', 'M', 'S', 'F', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
  os.write(kMagic, sizeof kMagic);
  put(os, kVersion);
  put(os, ckpt.fingerprint);
  put(os, static_cast<std::uint64_t>(ckpt.arrays.size()));
  for (const auto& [name, t] : ckpt.arrays) {
    put(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    const auto& shape = t.shape();
    put(os, static_cast<std::uint32_t>(shape.size()));
    for (int d : shape) put(os, static_cast<std::uint32_t>(d));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.numel() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  if (get<std::uint32_t>(is) != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version in " + path);
  }
  Checkpoint ckpt;
  ckpt.fingerprint = get<std::uint64_t>(is);
  const auto count = get<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto rank = get<std::uint32_t>(is);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = static_cast<int>(get<std::uint32_t>(is));
    ad::Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    ckpt.arrays.emplace(std::move(name), std::move(t));
  }
  return ckpt;
}

Checkpoint snapshot(const Model& model) {
  return {model.config().fingerprint(), model.state_arrays()};
}

void apply_checkpoint(Model& model, const Checkpoint& ckpt) {
  if (ckpt.fingerprint != model.config().fingerprint()) {
    throw std::runtime_error(
        "checkpoint: configuration fingerprint does not match the model");
  }
  model.load_state_arrays(ckpt.arrays);
}

}  // namespace mmsf::net
