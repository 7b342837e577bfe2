// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// Dense kernels behind the GRU detector. All matrices are row-major.
//
// Every output element is produced by exactly one thread with a fixed
// reduction order, so results do not depend on the OpenMP thread count.
// kernels_ref.hpp holds naive serial versions used as test oracles and as the
// benchmark baseline.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "cerule/common/parallel.hpp"

namespace cerule::kernels {

template <typename T>
inline T dot(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  CERULE_OMP_SIMD_SUM(acc)
  for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

/// C[m x n] = A[m x k] * B[n x k]^T (+ bias[n] when given, + C when accumulate).
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
             const T* bias = nullptr, bool accumulate = false) {
  const auto nn = static_cast<std::ptrdiff_t>(n);
  CERULE_OMP_PARALLEL_FOR
  for (std::ptrdiff_t j = 0; j < nn; ++j) {
    const T* brow = b + static_cast<std::size_t>(j) * k;
    const T base = bias ? bias[j] : T(0);
    for (std::size_t i = 0; i < m; ++i) {
      T v = base + dot(a + i * k, brow, k);
      T& out = c[i * n + static_cast<std::size_t>(j)];
      out = accumulate ? out + v : v;
    }
  }
}

/// C[m x n] += A[m x k] * B[k x n].
template <typename T>
void gemm_nn_acc(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  const auto mm = static_cast<std::ptrdiff_t>(m);
  CERULE_OMP_PARALLEL_FOR
  for (std::ptrdiff_t i = 0; i < mm; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    const T* arow = a + static_cast<std::size_t>(i) * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T s = arow[p];
      if (s == T(0)) continue;
      const T* brow = b + p * n;
      CERULE_OMP(simd)
      for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

/// C[m x n] += A[k x m]^T * B[k x n]. Used for weight gradients, where k is
/// the batch dimension.
template <typename T>
void gemm_tn_acc(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  const auto mm = static_cast<std::ptrdiff_t>(m);
  CERULE_OMP_PARALLEL_FOR
  for (std::ptrdiff_t i = 0; i < mm; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T s = a[p * m + static_cast<std::size_t>(i)];
      if (s == T(0)) continue;
      const T* brow = b + p * n;
      CERULE_OMP(simd)
      for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

/// out[n] += column sums of A[m x n].
template <typename T>
void add_column_sums(std::size_t m, std::size_t n, const T* a, T* out) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = a + i * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += row[j];
  }
}

template <typename T>
inline T sigmoid(T x) {
  // Split by sign so exp never overflows.
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace cerule::kernels
