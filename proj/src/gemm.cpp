#include "lsaf/detail/gemm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include <omp.h>

namespace lsaf::detail {

namespace {

// Every C element is updated as c = fma(a[i][k], b[k][j], c) for k
// ascending, whichever path handles it, so the result equals a plain triple
// loop over std::fma bit for bit.

using vec = real __attribute__((vector_size(64)));
constexpr std::size_t kLanes = sizeof(vec) / sizeof(real);
constexpr std::size_t kMr = 8;
constexpr std::size_t kStrip = 2 * kLanes;
constexpr std::size_t kKc = 256;
constexpr std::size_t kNc = 512;

inline vec load(const real* p) {
  vec v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store(real* p, const vec& v) { std::memcpy(p, &v, sizeof v); }

// Lane-wise std::fma; compiles to one vector FMA when the target has it.
inline vec madd(real s, const vec& b, const vec& acc) {
  vec out;
  for (std::size_t l = 0; l < kLanes; ++l) out[l] = std::fma(s, b[l], acc[l]);
  return out;
}

// C[0..kMr) x [0..kVecs*kLanes) += packed A (kc x kMr) * B (kc rows, stride ldb).
template <std::size_t kVecs>
void micro_kernel(std::size_t kc, const real* ap, const real* b, std::size_t ldb, real* c, std::size_t ldc) {
  vec acc[kMr][kVecs];
#pragma GCC unroll 8
  for (std::size_t i = 0; i < kMr; ++i)
#pragma GCC unroll 2
    for (std::size_t v = 0; v < kVecs; ++v) acc[i][v] = load(c + i * ldc + v * kLanes);
  for (std::size_t kk = 0; kk < kc; ++kk) {
    vec bv[kVecs];
#pragma GCC unroll 2
    for (std::size_t v = 0; v < kVecs; ++v) bv[v] = load(b + kk * ldb + v * kLanes);
    const real* a = ap + kk * kMr;
#pragma GCC unroll 8
    for (std::size_t i = 0; i < kMr; ++i)
#pragma GCC unroll 2
      for (std::size_t v = 0; v < kVecs; ++v) acc[i][v] = madd(a[i], bv[v], acc[i][v]);
  }
#pragma GCC unroll 8
  for (std::size_t i = 0; i < kMr; ++i)
#pragma GCC unroll 2
    for (std::size_t v = 0; v < kVecs; ++v) store(c + i * ldc + v * kLanes, acc[i][v]);
}

// Any rows x cols tile, same update order as the micro-kernel.
void edge_kernel(std::size_t rows, std::size_t cols, std::size_t kc, const real* ap, const real* b, std::size_t ldb,
                 real* c, std::size_t ldc) {
  for (std::size_t i = 0; i < rows; ++i) {
    real* crow = c + i * ldc;
    for (std::size_t kk = 0; kk < kc; ++kk) {
      const real av = ap[kk * kMr + i];
      const real* brow = b + kk * ldb;
      for (std::size_t j = 0; j < cols; ++j) crow[j] = std::fma(av, brow[j], crow[j]);
    }
  }
}

void pack_a(std::size_t i0, std::size_t rows, std::size_t k0, std::size_t kc, const real* a, std::size_t lda,
            bool transpose_a, real* ap) {
  for (std::size_t kk = 0; kk < kc; ++kk) {
    for (std::size_t i = 0; i < kMr; ++i) {
      real v = 0;
      if (i < rows) v = transpose_a ? a[(k0 + kk) * lda + i0 + i] : a[(i0 + i) * lda + k0 + kk];
      ap[kk * kMr + i] = v;
    }
  }
}

// B[k0..k0+kc) x [j0..j0+nc) as strips of kStrip columns, each strip kc x kStrip.
void pack_b(std::size_t k0, std::size_t kc, std::size_t j0, std::size_t nc, const real* b, std::size_t ldb,
            real* bp) {
  for (std::size_t s = 0; s * kStrip < nc; ++s) {
    const std::size_t width = std::min(kStrip, nc - s * kStrip);
    real* strip = bp + s * kc * kStrip;
    for (std::size_t kk = 0; kk < kc; ++kk) {
      std::copy_n(b + (k0 + kk) * ldb + j0 + s * kStrip, width, strip + kk * kStrip);
    }
  }
}

void panel_product(std::size_t rows, std::size_t nc, std::size_t kc, const real* ap, const real* bp, real* c,
                   std::size_t ldc) {
  for (std::size_t s = 0; s * kStrip < nc; ++s) {
    const std::size_t width = std::min(kStrip, nc - s * kStrip);
    const real* strip = bp + s * kc * kStrip;
    real* cs = c + s * kStrip;
    std::size_t j = 0;
    if (rows == kMr) {
      if (width == kStrip) {
        micro_kernel<2>(kc, ap, strip, kStrip, cs, ldc);
        continue;
      }
      if (width >= kLanes) {
        micro_kernel<1>(kc, ap, strip, kStrip, cs, ldc);
        j = kLanes;
      }
    }
    if (j < width) edge_kernel(rows, width - j, kc, ap, strip + j, kStrip, cs + j, ldc);
  }
}

}  // namespace

void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const real* a, std::size_t lda,
                     bool transpose_a, const real* b, std::size_t ldb, real* c, std::size_t ldc) {
  if (m == 0 || n == 0 || k == 0) return;
  const std::size_t panels = (m + kMr - 1) / kMr;
  const bool parallel = !omp_in_parallel() && panels > 1 && m * n * k > (1u << 18);
  const std::size_t strips = (std::min(n, kNc) + kStrip - 1) / kStrip;
  std::vector<real> bp(std::min(k, kKc) * strips * kStrip);

#pragma omp parallel if (parallel)
  {
    std::vector<real> ap(kKc * kMr);
    for (std::size_t k0 = 0; k0 < k; k0 += kKc) {
      const std::size_t kc = std::min(kKc, k - k0);
      for (std::size_t j0 = 0; j0 < n; j0 += kNc) {
        const std::size_t nc = std::min(kNc, n - j0);
#pragma omp single
        pack_b(k0, kc, j0, nc, b, ldb, bp.data());
#pragma omp for schedule(static)
        for (std::size_t p = 0; p < panels; ++p) {
          const std::size_t i0 = p * kMr;
          const std::size_t rows = std::min(kMr, m - i0);
          pack_a(i0, rows, k0, kc, a, lda, transpose_a, ap.data());
          panel_product(rows, nc, kc, ap.data(), bp.data(), c + i0 * ldc + j0, ldc);
        }
      }
    }
  }
}

void transpose_into(std::size_t m, std::size_t n, const real* in, real* out) {
  constexpr std::size_t tile = 32;
  for (std::size_t i0 = 0; i0 < m; i0 += tile) {
    for (std::size_t j0 = 0; j0 < n; j0 += tile) {
      const std::size_t i1 = std::min(m, i0 + tile);
      const std::size_t j1 = std::min(n, j0 + tile);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) out[j * m + i] = in[i * n + j];
      }
    }
  }
}

}  // namespace lsaf::detail
