#include "gemm_body.hpp"
#include "jrt/kernels.hpp"

namespace jrt::kernels::scalar {
namespace {

template <class T>
T dot(const T* x, const T* y, std::size_t n) {
  T s{0};
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

template <class T>
void axpy(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void gemm(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const T* a,
          std::size_t lda, const T* b, std::size_t ldb, T* c, std::size_t ldc, bool accumulate) {
  gemm_body<T>(ta, tb, m, n, k, a, lda, b, ldb, c, ldc, accumulate, dot<T>, axpy<T>);
}

}  // namespace

template <class T>
const KernelSet<T>& set() {
  static const KernelSet<T> s{&dot<T>, &axpy<T>, &gemm<T>};
  return s;
}

template const KernelSet<float>& set<float>();
template const KernelSet<double>& set<double>();

}  // namespace jrt::kernels::scalar
