// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
//
// Elementwise / reduction / shape ops. Binary ops broadcast only between
// same-shape tensors or against a 1-element tensor (either side).
#pragma once

#include <vector>

#include "mmsf/ad/graph.hpp"

namespace mmsf::ad {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

Var add(const Var& a, double b);
Var sub(double a, const Var& b);
Var mul(const Var& a, double b);

Var neg(const Var& x);
Var exp(const Var& x);
Var sqrt(const Var& x);
Var square(const Var& x);
Var abs(const Var& x);
Var sigmoid(const Var& x);
Var leaky_relu(const Var& x, double slope);
// Gradient passes where lo < x < hi and is zero where clamped.
Var clamp_min(const Var& x, double lo);

Var sum(const Var& x);
Var mean(const Var& x);

Var concat_channels(const std::vector<Var>& xs);
Var slice_channels(const Var& x, int first, int count);

// Elementwise product with a constant mask/tensor (no gradient to m).
Var mul_const(const Var& x, const Tensor& m);

}  // namespace mmsf::ad
