#pragma once

#include <array>
#include <cassert>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace seld {

// Dense row-major rank-3 tensor. Axis 0 is the channel axis everywhere in
// this library, axis 1 time, axis 2 frequency (or lag / mel band).
template <typename T>
class Tensor3 {
 public:
  using value_type = T;

  Tensor3() = default;
  Tensor3(std::size_t d0, std::size_t d1, std::size_t d2, T fill = T{})
      : shape_{d0, d1, d2}, data_(d0 * d1 * d2, fill) {}

  std::size_t dim(std::size_t axis) const { return shape_[axis]; }
  const std::array<std::size_t, 3>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j, std::size_t k) {
    assert(i < shape_[0] && j < shape_[1] && k < shape_[2]);
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    assert(i < shape_[0] && j < shape_[1] && k < shape_[2]);
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  // Contiguous d1 x d2 plane of one channel.
  std::span<T> channel(std::size_t i) {
    return std::span<T>(data_).subspan(i * shape_[1] * shape_[2],
                                       shape_[1] * shape_[2]);
  }
  std::span<const T> channel(std::size_t i) const {
    return std::span<const T>(data_).subspan(i * shape_[1] * shape_[2],
                                             shape_[1] * shape_[2]);
  }

  // Contiguous innermost row.
  std::span<T> row(std::size_t i, std::size_t j) {
    return std::span<T>(data_).subspan((i * shape_[1] + j) * shape_[2],
                                       shape_[2]);
  }
  std::span<const T> row(std::size_t i, std::size_t j) const {
    return std::span<const T>(data_).subspan((i * shape_[1] + j) * shape_[2],
                                             shape_[2]);
  }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  std::array<std::size_t, 3> shape_{0, 0, 0};
  std::vector<T> data_;
};

using RealTensor = Tensor3<float>;
using ComplexTensor = Tensor3<std::complex<double>>;

}  // namespace seld
