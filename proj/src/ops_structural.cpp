#include <algorithm>
#include <string>

#include "lsaf/ops.hpp"

namespace lsaf {

using detail::accumulate_grad;
using detail::make_result;

namespace {

Tensor permute(const Tensor& in, const std::vector<std::size_t>& axes) {
  const Shape& shape = in.shape();
  const std::size_t rank = shape.size();
  std::vector<std::size_t> in_stride(rank, 1);
  for (std::size_t i = rank - 1; i-- > 0;) in_stride[i] = in_stride[i + 1] * shape[i + 1];

  Shape out_shape(rank);
  std::vector<std::size_t> step(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = shape[axes[i]];
    step[i] = in_stride[axes[i]];
  }
  Tensor out(out_shape);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = in[pos];
    for (std::size_t axis = rank; axis-- > 0;) {
      pos += step[axis];
      if (++counter[axis] < out_shape[axis]) break;
      pos -= step[axis] * out_shape[axis];
      counter[axis] = 0;
    }
  }
  return out;
}

}  // namespace

Var transpose(const Var& x, std::vector<std::size_t> axes) {
  const std::size_t rank = x.value().rank();
  std::vector<std::size_t> sorted = axes;
  std::sort(sorted.begin(), sorted.end());
  bool valid = sorted.size() == rank;
  for (std::size_t i = 0; valid && i < rank; ++i) valid = sorted[i] == i;
  if (!valid) throw DimensionError("transpose: axes are not a permutation for shape " + to_string(x.shape()));

  std::vector<std::size_t> inverse(rank);
  for (std::size_t i = 0; i < rank; ++i) inverse[axes[i]] = i;
  return make_result(permute(x.value(), axes), {x},
                     [x, inverse](const Tensor& g) { accumulate_grad(x, permute(g, inverse)); });
}

Var concat(const std::vector<Var>& xs, std::size_t axis) {
  if (xs.empty()) throw DimensionError("concat of zero tensors");
  const Shape& first = xs.front().shape();
  if (axis >= first.size()) throw DimensionError("concat: axis out of range for " + to_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& x : xs) {
    const Shape& s = x.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) throw DimensionError("concat: shape " + to_string(s) + " incompatible with " + to_string(first));
    out_shape[axis] += s[axis];
  }
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];

  Tensor out(out_shape);
  const std::size_t out_row = out_shape[axis] * inner;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& x : xs) {
    offsets.push_back(offset);
    const std::size_t row = x.shape()[axis] * inner;
    const real* src = x.value().raw();
    for (std::size_t o = 0; o < outer; ++o) std::copy_n(src + o * row, row, out.raw() + o * out_row + offset);
    offset += row;
  }
  return make_result(std::move(out), xs, [xs, offsets, outer, inner, out_row, axis](const Tensor& g) {
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (!xs[k].requires_grad()) continue;
      const std::size_t row = xs[k].shape()[axis] * inner;
      Tensor dx(xs[k].shape());
      for (std::size_t o = 0; o < outer; ++o) std::copy_n(g.raw() + o * out_row + offsets[k], row, dx.raw() + o * row);
      accumulate_grad(xs[k], std::move(dx));
    }
  });
}

Var slice(const Var& x, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& shape = x.shape();
  if (axis >= shape.size() || length == 0 || start + length > shape[axis]) {
    throw DimensionError("slice [" + std::to_string(start) + ", " + std::to_string(start + length) +
                         ") on axis " + std::to_string(axis) + " invalid for " + to_string(shape));
  }
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];
  Shape out_shape = shape;
  out_shape[axis] = length;
  const std::size_t in_row = shape[axis] * inner;
  const std::size_t out_row = length * inner;
  Tensor out(out_shape);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(x.value().raw() + o * in_row + start * inner, out_row, out.raw() + o * out_row);
  }
  return make_result(std::move(out), {x}, [x, outer, in_row, out_row, start, inner](const Tensor& g) {
    Tensor dx = Tensor::zeros(x.shape());
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(g.raw() + o * out_row, out_row, dx.raw() + o * in_row + start * inner);
    }
    accumulate_grad(x, std::move(dx));
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return make_result(std::move(out), {x},
                     [x](const Tensor& g) { accumulate_grad(x, g.reshaped(x.shape())); });
}

}  // namespace lsaf
