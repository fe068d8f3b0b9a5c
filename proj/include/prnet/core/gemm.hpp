#pragma once

#include <algorithm>
#include <cstdint>

namespace prnet {

namespace detail {

// Tile extents per element type: 8x48 float accumulators fill the AVX-512
// register file; doubles get half the width to avoid spills.
template <typename T>
struct GemmTile {
  static constexpr int MR = 4;
  static constexpr int NR = 32;
};
template <>
struct GemmTile<float> {
  static constexpr int MR = 8;
  static constexpr int NR = 48;
};

constexpr int kGemmMaxMr = 8;
constexpr int kGemmMaxNr = 48;

// Register-tiled inner kernel: MR rows of A against an NR-wide slab of B.
// Fixed trip counts so the compiler fully vectorizes and unrolls.
template <typename T, int MR, int NR>
inline void gemm_tile(int64_t K, const T* __restrict a, int64_t lda, const T* __restrict b,
                      int64_t ldb, T* __restrict c, int64_t ldc, bool accumulate) {
  T acc[MR][NR] = {};
  for (int64_t k = 0; k < K; ++k) {
    const T* __restrict brow = b + k * ldb;
    for (int i = 0; i < MR; ++i) {
      const T av = a[i * lda + k];
      for (int j = 0; j < NR; ++j) acc[i][j] += av * brow[j];
    }
  }
  for (int i = 0; i < MR; ++i) {
    T* __restrict crow = c + i * ldc;
    if (accumulate)
      for (int j = 0; j < NR; ++j) crow[j] += acc[i][j];
    else
      for (int j = 0; j < NR; ++j) crow[j] = acc[i][j];
  }
}

// Edge tile with runtime extents.
template <typename T>
inline void gemm_tile_edge(int64_t K, int mr, int64_t nr, const T* __restrict a, int64_t lda,
                           const T* __restrict b, int64_t ldb, T* __restrict c, int64_t ldc,
                           bool accumulate) {
  T acc[kGemmMaxMr][kGemmMaxNr] = {};
  for (int64_t k = 0; k < K; ++k) {
    const T* __restrict brow = b + k * ldb;
    for (int i = 0; i < mr; ++i) {
      const T av = a[i * lda + k];
      for (int64_t j = 0; j < nr; ++j) acc[i][j] += av * brow[j];
    }
  }
  for (int i = 0; i < mr; ++i) {
    T* __restrict crow = c + i * ldc;
    if (accumulate)
      for (int64_t j = 0; j < nr; ++j) crow[j] += acc[i][j];
    else
      for (int64_t j = 0; j < nr; ++j) crow[j] = acc[i][j];
  }
}

}  // namespace detail

/// C[M x N] = A[M x K] * B[K x N] with explicit row strides (row-major).
/// accumulate=true adds into C instead of overwriting. Single-threaded and
/// bitwise deterministic for fixed shapes.
template <typename T>
void gemm_nn_ld(int64_t M, int64_t N, int64_t K, const T* A, int64_t lda, const T* B,
                int64_t ldb, T* C, int64_t ldc, bool accumulate = false) {
  constexpr int MR = detail::GemmTile<T>::MR;
  constexpr int NR = detail::GemmTile<T>::NR;
  int64_t i = 0;
  for (; i + MR <= M; i += MR) {
    int64_t j = 0;
    for (; j + NR <= N; j += NR)
      detail::gemm_tile<T, MR, NR>(K, A + i * lda, lda, B + j, ldb, C + i * ldc + j, ldc,
                                   accumulate);
    for (; j < N; j += NR)
      detail::gemm_tile_edge<T>(K, MR, std::min<int64_t>(NR, N - j), A + i * lda, lda, B + j,
                                ldb, C + i * ldc + j, ldc, accumulate);
  }
  for (; i < M; i += MR) {
    const int mr = int(std::min<int64_t>(MR, M - i));
    for (int64_t j = 0; j < N; j += NR)
      detail::gemm_tile_edge<T>(K, mr, std::min<int64_t>(NR, N - j), A + i * lda, lda, B + j,
                                ldb, C + i * ldc + j, ldc, accumulate);
  }
}

/// Densely packed variant: lda = K, ldb = ldc = N.
template <typename T>
void gemm_nn(int64_t M, int64_t N, int64_t K, const T* A, const T* B, T* C,
             bool accumulate = false) {
  gemm_nn_ld(M, N, K, A, K, B, N, C, N, accumulate);
}

/// Dense row-major transpose: dst[N x M] = src[M x N]^T.
template <typename T>
void transpose(int64_t M, int64_t N, const T* __restrict src, T* __restrict dst) {
  constexpr int64_t BS = 32;
  for (int64_t i0 = 0; i0 < M; i0 += BS)
    for (int64_t j0 = 0; j0 < N; j0 += BS) {
      const int64_t i1 = std::min(i0 + BS, M);
      const int64_t j1 = std::min(j0 + BS, N);
      for (int64_t i = i0; i < i1; ++i)
        for (int64_t j = j0; j < j1; ++j) dst[j * M + i] = src[i * N + j];
    }
}

}  // namespace prnet
