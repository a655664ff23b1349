#pragma once

// Inner-loop kernels behind every dense contraction in the library.
//
// Each ISA provides the same three entry points (dot, axpy, gemm) for float
// and double. The scalar set is the reference; wider sets must agree with it
// to rounding (they reassociate sums and use FMA). The active set is picked
// once per process from CPUID and can be forced for testing.

#include <cstddef>
#include <string_view>
#include <vector>

namespace jrt::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

// ISAs usable on this machine, Scalar first.
std::vector<Isa> available_isas();

Isa active_isa();

// Throws jrt::InvalidArgument if the ISA is unavailable on this CPU.
void force_isa(Isa isa);

// Restore the CPUID-selected default.
void reset_isa();

enum class Trans { No, Yes };

template <class T>
struct KernelSet {
  T (*dot)(const T* x, const T* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(std::size_t n, T alpha, const T* x, T* y);
  // C[m,n] (+)= op(A)[m,k] * op(B)[k,n], row-major with leading dimensions.
  void (*gemm)(Trans ta, Trans tb, std::size_t m, std::size_t n, std::size_t k, const T* a,
               std::size_t lda, const T* b, std::size_t ldb, T* c, std::size_t ldc,
               bool accumulate);
};

template <class T>
const KernelSet<T>& kernel_set(Isa isa);

template <class T>
const KernelSet<T>& active() {
  return kernel_set<T>(active_isa());
}

namespace scalar {
template <class T>
const KernelSet<T>& set();
}

namespace avx2 {
bool supported();
template <class T>
const KernelSet<T>& set();
}  // namespace avx2

}  // namespace jrt::kernels
