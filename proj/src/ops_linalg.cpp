#include <string>

#include "lsaf/detail/gemm.hpp"
#include "lsaf/ops.hpp"

namespace lsaf {

using detail::accumulate_grad;
using detail::gemm_accumulate;
using detail::make_result;

namespace {

[[noreturn]] void mismatch(const Shape& a, const Shape& b) {
  throw DimensionError("matmul: incompatible shapes " + to_string(a) + " and " + to_string(b));
}

// out[m x n] += g[m x n'] * b^T where b is [n x n'].
void times_transposed(std::size_t m, std::size_t n, std::size_t inner, const real* g, const real* b, real* out) {
  std::vector<real> bt(inner * n);
  detail::transpose_into(n, inner, b, bt.data());
  gemm_accumulate(m, n, inner, g, inner, false, bt.data(), n, out, n);
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();

  if (sa.size() == 2 && sb.size() == 2) {
    const std::size_t m = sa[0], k = sa[1], n = sb[1];
    if (sb[0] != k) mismatch(sa, sb);
    Tensor out = Tensor::zeros({m, n});
    gemm_accumulate(m, n, k, a.value().raw(), k, false, b.value().raw(), n, out.raw(), n);
    return make_result(std::move(out), {a, b}, [a, b, m, k, n](const Tensor& g) {
      if (a.requires_grad()) {
        Tensor da = Tensor::zeros({m, k});
        times_transposed(m, k, n, g.raw(), b.value().raw(), da.raw());
        accumulate_grad(a, std::move(da));
      }
      if (b.requires_grad()) {
        Tensor db = Tensor::zeros({k, n});
        gemm_accumulate(k, n, m, a.value().raw(), k, true, g.raw(), n, db.raw(), n);
        accumulate_grad(b, std::move(db));
      }
    });
  }

  if (sa.size() == 2 && sb.size() == 3) {
    const std::size_t m = sa[0], k = sa[1], batch = sb[0], n = sb[2];
    if (sb[1] != k) mismatch(sa, sb);
    Tensor out = Tensor::zeros({batch, m, n});
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < batch; ++i) {
      gemm_accumulate(m, n, k, a.value().raw(), k, false, b.value().raw() + i * k * n, n, out.raw() + i * m * n, n);
    }
    return make_result(std::move(out), {a, b}, [a, b, m, k, n, batch](const Tensor& g) {
      if (a.requires_grad()) {
        Tensor da = Tensor::zeros({m, k});
        for (std::size_t i = 0; i < batch; ++i) {
          times_transposed(m, k, n, g.raw() + i * m * n, b.value().raw() + i * k * n, da.raw());
        }
        accumulate_grad(a, std::move(da));
      }
      if (b.requires_grad()) {
        Tensor db = Tensor::zeros({batch, k, n});
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < batch; ++i) {
          gemm_accumulate(k, n, m, a.value().raw(), k, true, g.raw() + i * m * n, n, db.raw() + i * k * n, n);
        }
        accumulate_grad(b, std::move(db));
      }
    });
  }

  if (sa.size() == 3 && sb.size() == 2) {
    const std::size_t batch = sa[0], m = sa[1], k = sa[2], n = sb[1];
    if (sb[0] != k) mismatch(sa, sb);
    const std::size_t rows = batch * m;
    Tensor out = Tensor::zeros({batch, m, n});
    gemm_accumulate(rows, n, k, a.value().raw(), k, false, b.value().raw(), n, out.raw(), n);
    return make_result(std::move(out), {a, b}, [a, b, rows, k, n](const Tensor& g) {
      if (a.requires_grad()) {
        Tensor da = Tensor::zeros(a.shape());
        times_transposed(rows, k, n, g.raw(), b.value().raw(), da.raw());
        accumulate_grad(a, std::move(da));
      }
      if (b.requires_grad()) {
        Tensor db = Tensor::zeros({k, n});
        gemm_accumulate(k, n, rows, a.value().raw(), k, true, g.raw(), n, db.raw(), n);
        accumulate_grad(b, std::move(db));
      }
    });
  }

  mismatch(sa, sb);
}

}  // namespace lsaf
