#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "loadcnn/errors.hpp"

namespace loadcnn {

/// Dense n-dimensional array of doubles with row-major layout.
///
/// The invariant data.size() == product(shape) holds from construction on;
/// all dimensions are >= 1. Values are plain doubles, so two tensors with
/// equal shape and data compare equal.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<std::size_t> shape);

  /// Tensor adopting existing data; data length must match the shape.
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor full(std::vector<std::size_t> shape, double value);

  std::size_t rank() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t dim(std::size_t axis) const { return shape_[axis]; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  /// Multi-index access; the number of indices must equal the rank.
  template <class... Ix>
  double& at(Ix... ix) {
    return data_[offset({static_cast<std::size_t>(ix)...})];
  }
  template <class... Ix>
  double at(Ix... ix) const {
    return data_[offset({static_cast<std::size_t>(ix)...})];
  }

  /// Same data, new shape; sizes must agree.
  Tensor reshaped(std::vector<std::size_t> new_shape) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  void fill(double value);
  bool all_finite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::size_t offset(std::initializer_list<std::size_t> ix) const;

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// "[d0,d1,...]" for error messages.
std::string shape_to_string(const std::vector<std::size_t>& shape);

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace loadcnn
