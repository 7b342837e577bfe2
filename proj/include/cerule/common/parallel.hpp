// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

// OpenMP shim. Code outside this header never includes <omp.h> directly so
// the library still builds (serially) when OpenMP is unavailable.

#pragma once

#if defined(_MSC_VER)
#define CERULE_PRAGMA(X) __pragma(X)
#else
#define CERULE_PRAGMA(X) _Pragma(#X)
#endif

#ifdef _OPENMP
#include <omp.h>
#define CERULE_OMP(ARGS) CERULE_PRAGMA(omp ARGS)
#else
#define CERULE_OMP(ARGS)
inline int omp_get_max_threads() { return 1; }
inline int omp_get_thread_num() { return 0; }
inline void omp_set_num_threads(int) {}
#endif

#define CERULE_OMP_PARALLEL_FOR CERULE_OMP(parallel for schedule(static))
#define CERULE_OMP_SIMD_SUM(VAR) CERULE_OMP(simd reduction(+ : VAR))

namespace cerule {

/// Scoped override of the OpenMP thread count; restores the previous value.
class ThreadCountGuard {
 public:
  explicit ThreadCountGuard(int threads) : previous_(omp_get_max_threads()) {
    omp_set_num_threads(threads);
  }
  ~ThreadCountGuard() { omp_set_num_threads(previous_); }
  ThreadCountGuard(const ThreadCountGuard&) = delete;
  ThreadCountGuard& operator=(const ThreadCountGuard&) = delete;

 private:
  int previous_;
};

}  // namespace cerule
