// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace mmsf::ad {

// Dense row-major tensor of doubles. Rank stays small in practice:
// {} scalar, {n} vector, {c,h,w} image-like map, {o,i,kh,kw} conv kernel.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(count(shape_), 0.0);
  }
  Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
    data_.assign(count(shape_), fill);
  }

  static Tensor scalar(double v) {
    Tensor t{std::vector<int>{}};
    t.data_[0] = v;
    return t;
  }
  static Tensor from(std::vector<int> shape, std::vector<double> data) {
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    assert(static_cast<long>(t.data_.size()) == count(t.shape_));
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  long numel() const { return static_cast<long>(data_.size()); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](long i) { return data_[static_cast<size_t>(i)]; }
  double operator[](long i) const { return data_[static_cast<size_t>(i)]; }

  // {c,h,w} accessors.
  int channels() const { assert(rank() == 3); return shape_[0]; }
  int height() const { assert(rank() == 3); return shape_[1]; }
  int width() const { assert(rank() == 3); return shape_[2]; }
  double& at(int c, int y, int x) {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<size_t>(c) * shape_[1] + y) * shape_[2] + x];
  }

  double item() const { assert(numel() == 1); return data_[0]; }
  void fill(double v) { data_.assign(data_.size(), v); }

  static long count(const std::vector<int>& shape) {
    long n = 1;
    for (int d : shape) n *= d;
    return n;
  }

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace mmsf::ad
