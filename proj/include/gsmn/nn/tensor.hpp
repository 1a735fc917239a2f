#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "gsmn/common.hpp"

namespace gsmn::nn {

// Dense row-major tensor with up to 4 dims. Feature maps use (C, H, W);
// vectors use (N). Scalar type is a template parameter so the same graph
// code runs in float for training and double for finite-difference checks.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(numel(), T(0));
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int> shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  static Tensor scalar(T value) {
    Tensor t({1});
    t.data_[0] = value;
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[size_t(i)]; }
  int ndim() const { return int(shape_.size()); }

  size_t numel() const {
    if (shape_.empty()) return 0;
    size_t n = 1;
    for (int d : shape_) n *= size_t(d);
    return n;
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  // (C, H, W) indexing for feature maps.
  T& at(int c, int h, int w) { return data_[(size_t(c) * size_t(shape_[1]) + size_t(h)) * size_t(shape_[2]) + size_t(w)]; }
  const T& at(int c, int h, int w) const {
    return data_[(size_t(c) * size_t(shape_[1]) + size_t(h)) * size_t(shape_[2]) + size_t(w)];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (T v : data_)
      if (!std::isfinite(double(v))) return false;
    return true;
  }

  using Map = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  Map as_matrix(int rows, int cols) { return Map(data_.data(), rows, cols); }
  ConstMap as_matrix(int rows, int cols) const { return ConstMap(data_.data(), rows, cols); }

 private:
  std::vector<int> shape_;
  std::vector<T> data_;
};

}  // namespace gsmn::nn
