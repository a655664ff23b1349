#pragma once

// Loop nest shared by every ISA's gemm. Included by exactly one translation
// unit per ISA; everything here has internal linkage so that instantiations
// compiled with different target flags never merge at link time.

#include <cstddef>

#include "jrt/kernels.hpp"

namespace jrt::kernels {
namespace {

template <class T, class Dot, class Axpy>
void gemm_body(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const T* a,
               std::size_t lda, const T* b, std::size_t ldb, T* c, std::size_t ldc,
               bool accumulate, Dot dot, Axpy axpy) {
  if (!accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] = T{0};
    }
  }
  if (ta == Trans::No && tb == Trans::No) {
    for (std::size_t i = 0; i < m; ++i) {
      T* crow = c + i * ldc;
      for (std::size_t p = 0; p < k; ++p) {
        axpy(n, a[i * lda + p], b + p * ldb, crow);
      }
    }
  } else if (ta == Trans::No && tb == Trans::Yes) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] += dot(a + i * lda, b + j * ldb, k);
    }
  } else if (ta == Trans::Yes && tb == Trans::No) {
    for (std::size_t p = 0; p < k; ++p) {
      const T* brow = b + p * ldb;
      for (std::size_t i = 0; i < m; ++i) {
        axpy(n, a[p * lda + i], brow, c + i * ldc);
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        T s{0};
        for (std::size_t p = 0; p < k; ++p) s += a[p * lda + i] * b[j * ldb + p];
        c[i * ldc + j] += s;
      }
    }
  }
}

}  // namespace
}  // namespace jrt::kernels
