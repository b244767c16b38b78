// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "mmsf/ad/tensor.hpp"

namespace mmsf::net {

// Single-file archive of named shape-tagged double arrays. The fingerprint
// binds the archive to the model configuration that produced it; loading
// into a differently-configured model is rejected before any shapes are
// compared.
struct Checkpoint {
  std::uint64_t fingerprint = 0;
  std::map<std::string, ad::Tensor> arrays;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);  // throws std::runtime_error

class Model;

Checkpoint snapshot(const Model& model);
// Rejects archives whose fingerprint or array shapes do not match the model.
void apply_checkpoint(Model& model, const Checkpoint& ckpt);

}  // namespace mmsf::net
