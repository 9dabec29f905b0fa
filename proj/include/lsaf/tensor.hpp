#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "lsaf/errors.hpp"

namespace lsaf {

#ifdef LSAF_SINGLE_PRECISION
using real = float;
#else
using real = double;
#endif

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major array of reals with shape metadata.
///
/// Every dimension is positive and the element count always equals the
/// product of the shape. A scalar is represented with shape {1}.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, real fill = real(0));
  Tensor(Shape shape, std::vector<real> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), real(0)); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), real(1)); }
  static Tensor scalar(real value) { return Tensor({1}, value); }
  /// Row-major 2-D literal, e.g. Tensor::matrix({{1, 2}, {3, 4}}).
  static Tensor matrix(std::initializer_list<std::initializer_list<real>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<real> data() { return data_; }
  std::span<const real> data() const { return data_; }
  real* raw() { return data_.data(); }
  const real* raw() const { return data_.data(); }

  real& operator[](std::size_t i) { return data_[i]; }
  real operator[](std::size_t i) const { return data_[i]; }

  /// Multi-index access with bounds checking.
  real& at(std::initializer_list<std::size_t> index);
  real at(std::initializer_list<std::size_t> index) const;

  /// Same data under a new shape with identical element count.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  void fill(real value);
  bool all_finite() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(real factor);

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  std::size_t offset_of(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<real> data_;
};

/// Throws DimensionError unless both shapes are identical.
void require_same_shape(const Shape& a, const Shape& b, const char* what);

/// Largest absolute elementwise difference; shapes must match.
real max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace lsaf
