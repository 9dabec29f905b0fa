#include <algorithm>
#include <cmath>
#include <string>

#include "lsaf/ops.hpp"

namespace lsaf {

using detail::accumulate_grad;
using detail::make_result;

namespace {

bool broadcastable(const Shape& big, const Shape& small) {
  if (small.size() > big.size()) return false;
  const std::size_t offset = big.size() - small.size();
  for (std::size_t j = 0; j < small.size(); ++j) {
    if (small[j] != big[offset + j] && small[j] != 1) return false;
  }
  return true;
}

// For each element of `big`, the flat index of the broadcast element of `small`.
std::vector<std::size_t> broadcast_index(const Shape& big, const Shape& small) {
  const std::size_t rank = big.size();
  const std::size_t offset = rank - small.size();
  std::vector<std::size_t> stride(rank, 0);
  std::size_t s = 1;
  for (std::size_t j = small.size(); j-- > 0;) {
    stride[offset + j] = small[j] == 1 ? 0 : s;
    s *= small[j];
  }
  std::vector<std::size_t> index(numel(big));
  std::vector<std::size_t> counter(rank, 0);
  std::size_t pos = 0;
  for (auto& out : index) {
    out = pos;
    for (std::size_t axis = rank; axis-- > 0;) {
      pos += stride[axis];
      if (++counter[axis] < big[axis]) break;
      pos -= stride[axis] * big[axis];
      counter[axis] = 0;
    }
  }
  return index;
}

enum class Binary { add, mul };

Var binary(const Var& lhs, const Var& rhs, Binary kind) {
  const char* name = kind == Binary::add ? "add" : "mul";
  const Shape& sa = lhs.shape();
  const Shape& sb = rhs.shape();
  if (sa == sb) {
    const Tensor& a = lhs.value();
    const Tensor& b = rhs.value();
    Tensor out(sa);
    if (kind == Binary::add) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    } else {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    }
    return make_result(std::move(out), {lhs, rhs}, [lhs, rhs, kind](const Tensor& g) {
      if (kind == Binary::add) {
        accumulate_grad(lhs, g);
        accumulate_grad(rhs, g);
        return;
      }
      if (lhs.requires_grad()) {
        Tensor da(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) da[i] = g[i] * rhs.value()[i];
        accumulate_grad(lhs, std::move(da));
      }
      if (rhs.requires_grad()) {
        Tensor db(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) db[i] = g[i] * lhs.value()[i];
        accumulate_grad(rhs, std::move(db));
      }
    });
  }

  // `big` keeps its shape; `small` is broadcast along the leading/unit axes.
  Var big = lhs;
  Var small = rhs;
  if (!broadcastable(sa, sb)) {
    if (!broadcastable(sb, sa)) {
      throw DimensionError(std::string(name) + ": cannot broadcast " + to_string(sa) + " with " +
                           to_string(sb));
    }
    std::swap(big, small);
  }
  auto index = std::make_shared<std::vector<std::size_t>>(broadcast_index(big.shape(), small.shape()));
  const Tensor& a = big.value();
  const Tensor& b = small.value();
  Tensor out(a.shape());
  if (kind == Binary::add) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[(*index)[i]];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[(*index)[i]];
  }
  return make_result(std::move(out), {big, small}, [big, small, kind, index](const Tensor& g) {
    const auto& idx = *index;
    if (big.requires_grad()) {
      if (kind == Binary::add) {
        accumulate_grad(big, g);
      } else {
        Tensor da(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) da[i] = g[i] * small.value()[idx[i]];
        accumulate_grad(big, std::move(da));
      }
    }
    if (small.requires_grad()) {
      Tensor db = Tensor::zeros(small.shape());
      if (kind == Binary::add) {
        for (std::size_t i = 0; i < g.size(); ++i) db[idx[i]] += g[i];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) db[idx[i]] += g[i] * big.value()[i];
      }
      accumulate_grad(small, std::move(db));
    }
  });
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* what) {
  if (axis >= shape.size()) {
    throw DimensionError(std::string(what) + ": axis " + std::to_string(axis) + " invalid for shape " +
                         to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.length = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Var add(const Var& a, const Var& b) { return binary(a, b, Binary::add); }
Var mul(const Var& a, const Var& b) { return binary(a, b, Binary::mul); }

Var scale(const Var& x, real factor) {
  Tensor out = x.value();
  out *= factor;
  return make_result(std::move(out), {x}, [x, factor](const Tensor& g) {
    Tensor dx = g;
    dx *= factor;
    accumulate_grad(x, std::move(dx));
  });
}

Var relu(const Var& x) {
  const Tensor& v = x.value();
  Tensor out(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > real(0) ? v[i] : real(0);
  return make_result(std::move(out), {x}, [x](const Tensor& g) {
    const Tensor& v = x.value();
    Tensor dx(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] = v[i] > real(0) ? g[i] : real(0);
    accumulate_grad(x, std::move(dx));
  });
}

Var sigmoid(const Var& x) {
  const Tensor& v = x.value();
  auto out = std::make_shared<Tensor>(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) {
    // Split by sign so exp never overflows.
    if (v[i] >= real(0)) {
      (*out)[i] = real(1) / (real(1) + std::exp(-v[i]));
    } else {
      const real e = std::exp(v[i]);
      (*out)[i] = e / (real(1) + e);
    }
  }
  Tensor value = *out;
  return make_result(std::move(value), {x}, [x, out](const Tensor& g) {
    Tensor dx(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] = g[i] * (*out)[i] * (real(1) - (*out)[i]);
    accumulate_grad(x, std::move(dx));
  });
}

Var softmax(const Var& x, std::size_t axis) {
  const AxisSplit s = split_axis(x.shape(), axis, "softmax");
  const Tensor& v = x.value();
  auto out = std::make_shared<Tensor>(v.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.length * s.inner + in;
      real peak = v[base];
      for (std::size_t k = 1; k < s.length; ++k) peak = std::max(peak, v[base + k * s.inner]);
      real total = 0;
      for (std::size_t k = 0; k < s.length; ++k) {
        const real e = std::exp(v[base + k * s.inner] - peak);
        (*out)[base + k * s.inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < s.length; ++k) (*out)[base + k * s.inner] /= total;
    }
  }
  Tensor value = *out;
  return make_result(std::move(value), {x}, [x, out, s](const Tensor& g) {
    const Tensor& y = *out;
    Tensor dx(g.shape());
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.length * s.inner + in;
        real dot = 0;
        for (std::size_t k = 0; k < s.length; ++k) dot += g[base + k * s.inner] * y[base + k * s.inner];
        for (std::size_t k = 0; k < s.length; ++k) {
          const std::size_t i = base + k * s.inner;
          dx[i] = y[i] * (g[i] - dot);
        }
      }
    }
    accumulate_grad(x, std::move(dx));
  });
}

Var sum(const Var& x) {
  real total = 0;
  for (real v : x.value().data()) total += v;
  return make_result(Tensor::scalar(total), {x}, [x](const Tensor& g) {
    accumulate_grad(x, Tensor(x.shape(), g[0]));
  });
}

Var mean(const Var& x, std::size_t axis, bool keepdim) {
  const AxisSplit s = split_axis(x.shape(), axis, "mean");
  Shape out_shape = x.shape();
  if (keepdim || out_shape.size() == 1) {
    out_shape[axis] = 1;
  } else {
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  }
  const Tensor& v = x.value();
  Tensor out(out_shape);
  const real inv = real(1) / static_cast<real>(s.length);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      real total = 0;
      for (std::size_t k = 0; k < s.length; ++k) total += v[(o * s.length + k) * s.inner + in];
      out[o * s.inner + in] = total * inv;
    }
  }
  return make_result(std::move(out), {x}, [x, s, inv](const Tensor& g) {
    Tensor dx(x.shape());
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t k = 0; k < s.length; ++k) {
        for (std::size_t in = 0; in < s.inner; ++in) dx[(o * s.length + k) * s.inner + in] = g[o * s.inner + in] * inv;
      }
    }
    accumulate_grad(x, std::move(dx));
  });
}

Var cross_entropy(const Var& logits, std::span<const int> targets) {
  if (logits.value().rank() != 2) {
    throw DimensionError("cross_entropy expects [n,k] logits, got " + to_string(logits.shape()));
  }
  const std::size_t n = logits.shape()[0];
  const std::size_t k = logits.shape()[1];
  if (targets.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(n) + " rows");
  }
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= k) {
      throw ContractError("cross_entropy: target " + std::to_string(t) + " outside [0," + std::to_string(k) + ")");
    }
  }
  const Tensor& z = logits.value();
  auto probs = std::make_shared<Tensor>(z.shape());
  real loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const real* row = z.raw() + i * k;
    const real peak = *std::max_element(row, row + k);
    real total = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const real e = std::exp(row[j] - peak);
      (*probs)[i * k + j] = e;
      total += e;
    }
    for (std::size_t j = 0; j < k; ++j) (*probs)[i * k + j] /= total;
    loss += std::log(total) + peak - row[targets[i]];
  }
  loss /= static_cast<real>(n);
  std::vector<int> labels(targets.begin(), targets.end());
  return make_result(Tensor::scalar(loss), {logits}, [logits, probs, labels = std::move(labels), n, k](const Tensor& g) {
    Tensor dz = *probs;
    for (std::size_t i = 0; i < n; ++i) dz[i * k + static_cast<std::size_t>(labels[i])] -= real(1);
    dz *= g[0] / static_cast<real>(n);
    accumulate_grad(logits, std::move(dz));
  });
}

}  // namespace lsaf
