#pragma once

#include <cstddef>

#include "lsaf/tensor.hpp"

namespace lsaf::detail {

/// C[m x n] += op(A) * B, all row-major.
///
/// op(A) is A (m x k, leading dimension lda) or, when transpose_a is set, the
/// transpose of a k x m array. Each output element accumulates its k terms in
/// ascending order regardless of blocking or thread count, so results are
/// bit-reproducible and match a plain triple loop of c = std::fma(a, b, c).
void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const real* a, std::size_t lda,
                     bool transpose_a, const real* b, std::size_t ldb, real* c, std::size_t ldc);

/// out[n x m] = in[m x n]^T.
void transpose_into(std::size_t m, std::size_t n, const real* in, real* out);

}  // namespace lsaf::detail
