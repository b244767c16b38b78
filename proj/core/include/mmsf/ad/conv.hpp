// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#pragma once

#include "mmsf/ad/graph.hpp"

namespace mmsf::ad {

// 2-D convolution, zero padding. x {Cin,H,W}, w {Cout,Cin,kh,kw}, b {Cout}
// (may be an empty Var for no bias). Output {Cout, (H+2p-kh)/s+1, ...}.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);

}  // namespace mmsf::ad
