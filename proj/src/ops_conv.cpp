#include <algorithm>
#include <string>
#include <type_traits>
#include <vector>

#include "lsaf/detail/gemm.hpp"
#include "lsaf/ops.hpp"

namespace lsaf {

using detail::accumulate_grad;
using detail::gemm_accumulate;
using detail::make_result;

namespace {

// Convolution geometry; 2-D convolutions run as depth-1 3-D ones.
struct Geometry {
  std::size_t batch = 1, cin = 1, cout = 1;
  std::array<std::size_t, 3> in{1, 1, 1};
  std::array<std::size_t, 3> kernel{1, 1, 1};
  std::array<std::size_t, 3> stride{1, 1, 1};
  std::array<std::size_t, 3> pad{0, 0, 0};
  std::array<std::size_t, 3> out{1, 1, 1};

  std::size_t depth() const { return cin * kernel[0] * kernel[1] * kernel[2]; }
  std::size_t positions() const { return out[0] * out[1] * out[2]; }
  std::size_t in_volume() const { return in[0] * in[1] * in[2]; }
};

// Columns are the flattened (sample, output position) pairs. They are
// processed in blocks sized so that one column block stays cache resident.
constexpr std::size_t kBlockEntries = std::size_t{1} << 17;
constexpr std::size_t kMinBlockColumns = 128;

std::size_t block_columns(const Geometry& g) {
  const std::size_t total = g.batch * g.positions();
  const std::size_t width = std::max(kMinBlockColumns, kBlockEntries / g.depth());
  return std::min(total, width);
}

// Walks columns [c0, c1) of the column matrix as runs along the innermost
// output axis: fn(row, column, src, length) covers `length` consecutive
// columns (relative to c0) whose sources are src, src + stride, ..., or zero
// padding when src < 0. Rows follow (ci, kd, kh, kw) order.
template <class Fn>
void for_each_run(const Geometry& g, std::size_t c0, std::size_t c1, Fn&& fn) {
  const std::size_t positions = g.positions();
  const std::size_t out_x = g.out[2];
  const std::size_t sx = g.stride[2];
  for (std::size_t sample = c0 / positions; sample * positions < c1; ++sample) {
    const std::size_t base_column = sample * positions;
    // Output lines of this sample that intersect the block.
    const std::size_t first_line = (std::max(c0, base_column) - base_column) / out_x;
    const std::size_t end_line = (std::min(c1, base_column + positions) - base_column + out_x - 1) / out_x;
    const std::size_t sample_base = sample * g.cin * g.in_volume();
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      const std::size_t channel_base = sample_base + ci * g.in_volume();
      for (std::size_t kz = 0; kz < g.kernel[0]; ++kz) {
        for (std::size_t ky = 0; ky < g.kernel[1]; ++ky) {
          for (std::size_t kx = 0; kx < g.kernel[2]; ++kx) {
            const std::size_t row = ((ci * g.kernel[0] + kz) * g.kernel[1] + ky) * g.kernel[2] + kx;
            // Output columns [lo, hi) of a line read inside the input along x.
            std::size_t lo = g.pad[2] > kx ? (g.pad[2] - kx + sx - 1) / sx : 0;
            std::size_t hi = g.in[2] + g.pad[2] > kx ? (g.in[2] + g.pad[2] - kx - 1) / sx + 1 : 0;
            lo = std::min(lo, out_x);
            hi = std::clamp(hi, lo, out_x);
            for (std::size_t line = first_line; line < end_line; ++line) {
              const std::size_t oz = line / g.out[1];
              const std::size_t oy = line % g.out[1];
              const std::size_t line_start = base_column + line * out_x;
              // Visible part of the line: [a, b) in line-local coordinates.
              const std::size_t a = c0 > line_start ? c0 - line_start : 0;
              const std::size_t b = std::min(out_x, c1 - line_start);
              // src0 is the (possibly negative) source of output column 0;
              // padded runs are reported with src -1.
              auto emit = [&](std::size_t from, std::size_t to, bool padded, std::ptrdiff_t src0) {
                from = std::max(from, a);
                to = std::min(to, b);
                if (from >= to) return;
                const std::ptrdiff_t src = padded ? -1 : src0 + static_cast<std::ptrdiff_t>(from * sx);
                fn(row, line_start + from - c0, src, to - from);
              };
              const std::ptrdiff_t z = static_cast<std::ptrdiff_t>(oz * g.stride[0] + kz) - static_cast<std::ptrdiff_t>(g.pad[0]);
              const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * g.stride[1] + ky) - static_cast<std::ptrdiff_t>(g.pad[1]);
              if (z < 0 || z >= static_cast<std::ptrdiff_t>(g.in[0]) || y < 0 || y >= static_cast<std::ptrdiff_t>(g.in[1])) {
                emit(0, out_x, true, 0);
                continue;
              }
              const std::size_t input_line =
                  channel_base + (static_cast<std::size_t>(z) * g.in[1] + static_cast<std::size_t>(y)) * g.in[2];
              emit(0, lo, true, 0);
              // Source of output column 0 on this line, extended backwards
              // arithmetically; only columns >= lo are ever read.
              emit(lo, hi, false, static_cast<std::ptrdiff_t>(input_line + kx) - static_cast<std::ptrdiff_t>(g.pad[2]));
              emit(hi, out_x, true, 0);
            }
          }
        }
      }
    }
  }
}

// col[depth x (c1 - c0)]
void im2col(const Geometry& g, const real* x, std::size_t c0, std::size_t c1, real* col) {
  const std::size_t width = c1 - c0;
  const std::size_t sx = g.stride[2];
  for_each_run(g, c0, c1, [&](std::size_t row, std::size_t column, std::ptrdiff_t src, std::size_t length) {
    real* dst = col + row * width + column;
    if (src < 0) {
      std::fill_n(dst, length, real(0));
    } else if (sx == 1) {
      std::copy_n(x + src, length, dst);
    } else {
      for (std::size_t i = 0; i < length; ++i) dst[i] = x[static_cast<std::size_t>(src) + i * sx];
    }
  });
}

void col2im(const Geometry& g, const real* col, std::size_t c0, std::size_t c1, real* dx) {
  const std::size_t width = c1 - c0;
  const std::size_t sx = g.stride[2];
  for_each_run(g, c0, c1, [&](std::size_t row, std::size_t column, std::ptrdiff_t src, std::size_t length) {
    if (src < 0) return;
    const real* from = col + row * width + column;
    real* to = dx + src;
    for (std::size_t i = 0; i < length; ++i) to[i * sx] += from[i];
  });
}

// Copies columns [c0, c1) of an [n, cout, positions] array into a
// [cout, c1 - c0] block, or back.
template <bool kToBlock>
void move_block(const Geometry& g, std::conditional_t<kToBlock, const real*, real*> nchw, std::size_t c0,
                std::size_t c1, std::conditional_t<kToBlock, real*, const real*> block) {
  const std::size_t positions = g.positions();
  const std::size_t width = c1 - c0;
  for (std::size_t sample = c0 / positions; sample * positions < c1; ++sample) {
    const std::size_t from = std::max(c0, sample * positions);
    const std::size_t to = std::min(c1, (sample + 1) * positions);
    const std::size_t p = from - sample * positions;
    for (std::size_t o = 0; o < g.cout; ++o) {
      const std::size_t offset = (sample * g.cout + o) * positions + p;
      if constexpr (kToBlock) {
        std::copy(nchw + offset, nchw + offset + (to - from), block + o * width + (from - c0));
      } else {
        std::copy(block + o * width + (from - c0), block + o * width + (to - c0), nchw + offset);
      }
    }
  }
}

std::size_t output_extent(std::size_t in, std::size_t k, std::size_t s, std::size_t p, const char* op) {
  if (s == 0) throw ConfigError(std::string(op) + ": stride must be positive");
  if (k > in + 2 * p) {
    throw ConfigError(std::string(op) + ": kernel extent " + std::to_string(k) + " exceeds padded input " +
                      std::to_string(in + 2 * p));
  }
  if ((in + 2 * p - k) % s != 0) {
    throw ConfigError(std::string(op) + ": non-integral output size for input " + std::to_string(in) +
                      ", kernel " + std::to_string(k) + ", stride " + std::to_string(s) + ", padding " +
                      std::to_string(p));
  }
  return (in + 2 * p - k) / s + 1;
}

Var conv_core(const Var& input, const Var& kernels, Geometry g, Shape out_shape) {
  const std::size_t depth = g.depth();
  const std::size_t total = g.batch * g.positions();
  const std::size_t step = block_columns(g);

  Tensor out(out_shape);
  const real* x = input.value().raw();
  const real* w = kernels.value().raw();
  std::vector<real> col;
  std::vector<real> block;
  for (std::size_t c0 = 0; c0 < total; c0 += step) {
    const std::size_t c1 = std::min(total, c0 + step);
    col.resize(depth * (c1 - c0));
    block.assign(g.cout * (c1 - c0), real(0));
    im2col(g, x, c0, c1, col.data());
    gemm_accumulate(g.cout, c1 - c0, depth, w, depth, false, col.data(), c1 - c0, block.data(), c1 - c0);
    move_block<false>(g, out.raw(), c0, c1, block.data());
  }

  return make_result(std::move(out), {input, kernels}, [input, kernels, g, step](const Tensor& grad) {
    const std::size_t depth = g.depth();
    const std::size_t total = g.batch * g.positions();
    const real* dy = grad.raw();
    const real* x = input.value().raw();
    const real* w = kernels.value().raw();
    std::vector<real> col;
    std::vector<real> block;

    if (input.requires_grad()) {
      Tensor dx = Tensor::zeros(input.shape());
      for (std::size_t c0 = 0; c0 < total; c0 += step) {
        const std::size_t c1 = std::min(total, c0 + step);
        block.resize(g.cout * (c1 - c0));
        col.assign(depth * (c1 - c0), real(0));
        move_block<true>(g, dy, c0, c1, block.data());
        gemm_accumulate(depth, c1 - c0, g.cout, w, depth, true, block.data(), c1 - c0, col.data(), c1 - c0);
        col2im(g, col.data(), c0, c1, dx.raw());
      }
      accumulate_grad(input, std::move(dx));
    }

    if (kernels.requires_grad()) {
      // dW^T [depth x cout] accumulates col * dY^T block by block in column
      // order, then is transposed once.
      std::vector<real> dw_t(depth * g.cout, real(0));
      std::vector<real> block_t;
      for (std::size_t c0 = 0; c0 < total; c0 += step) {
        const std::size_t c1 = std::min(total, c0 + step);
        const std::size_t width = c1 - c0;
        col.resize(depth * width);
        block.resize(g.cout * width);
        block_t.resize(width * g.cout);
        im2col(g, x, c0, c1, col.data());
        move_block<true>(g, dy, c0, c1, block.data());
        detail::transpose_into(g.cout, width, block.data(), block_t.data());
        gemm_accumulate(depth, g.cout, width, col.data(), width, false, block_t.data(), g.cout, dw_t.data(), g.cout);
      }
      Tensor dw(kernels.shape());
      detail::transpose_into(depth, g.cout, dw_t.data(), dw.raw());
      accumulate_grad(kernels, std::move(dw));
    }
  });
}

}  // namespace

Var conv2d(const Var& input, const Var& kernels, std::array<std::size_t, 2> stride, std::array<std::size_t, 2> padding) {
  const Shape& si = input.shape();
  const Shape& sk = kernels.shape();
  if ((si.size() != 3 && si.size() != 4) || sk.size() != 4) {
    throw DimensionError("conv2d: expected input [n,cin,h,w] or [cin,h,w] and kernels [cout,cin,kh,kw], got " +
                         to_string(si) + " and " + to_string(sk));
  }
  const bool batched = si.size() == 4;
  const std::size_t off = batched ? 1 : 0;
  Geometry g;
  g.batch = batched ? si[0] : 1;
  g.cin = si[off];
  g.cout = sk[0];
  if (sk[1] != g.cin) {
    throw DimensionError("conv2d: input channels of " + to_string(si) + " do not match kernels " + to_string(sk));
  }
  g.in = {1, si[off + 1], si[off + 2]};
  g.kernel = {1, sk[2], sk[3]};
  g.stride = {1, stride[0], stride[1]};
  g.pad = {0, padding[0], padding[1]};
  for (std::size_t a = 1; a < 3; ++a) g.out[a] = output_extent(g.in[a], g.kernel[a], g.stride[a], g.pad[a], "conv2d");
  Shape out_shape = batched ? Shape{g.batch, g.cout, g.out[1], g.out[2]} : Shape{g.cout, g.out[1], g.out[2]};
  return conv_core(input, kernels, g, std::move(out_shape));
}

Var conv3d(const Var& input, const Var& kernels, std::array<std::size_t, 3> stride, std::array<std::size_t, 3> padding) {
  const Shape& si = input.shape();
  const Shape& sk = kernels.shape();
  if ((si.size() != 4 && si.size() != 5) || sk.size() != 5) {
    throw DimensionError("conv3d: expected input [n,cin,d,h,w] or [cin,d,h,w] and kernels [cout,cin,kd,kh,kw], got " +
                         to_string(si) + " and " + to_string(sk));
  }
  const bool batched = si.size() == 5;
  const std::size_t off = batched ? 1 : 0;
  Geometry g;
  g.batch = batched ? si[0] : 1;
  g.cin = si[off];
  g.cout = sk[0];
  if (sk[1] != g.cin) {
    throw DimensionError("conv3d: input channels of " + to_string(si) + " do not match kernels " + to_string(sk));
  }
  g.in = {si[off + 1], si[off + 2], si[off + 3]};
  g.kernel = {sk[2], sk[3], sk[4]};
  g.stride = stride;
  g.pad = padding;
  for (std::size_t a = 0; a < 3; ++a) g.out[a] = output_extent(g.in[a], g.kernel[a], g.stride[a], g.pad[a], "conv3d");
  Shape out_shape = batched ? Shape{g.batch, g.cout, g.out[0], g.out[1], g.out[2]}
                            : Shape{g.cout, g.out[0], g.out[1], g.out[2]};
  return conv_core(input, kernels, g, std::move(out_shape));
}

}  // namespace lsaf
