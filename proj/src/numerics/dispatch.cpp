#include <atomic>

#include "jrt/error.hpp"
#include "jrt/kernels.hpp"

namespace jrt::kernels {

#if !defined(JRT_HAVE_AVX2)
namespace avx2 {
template <class T>
const KernelSet<T>& set() {
  return scalar::set<T>();
}
template const KernelSet<float>& set<float>();
template const KernelSet<double>& set<double>();
}  // namespace avx2
#endif

namespace avx2 {
bool supported() {
#if defined(JRT_HAVE_AVX2)
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}
}  // namespace avx2

namespace {

Isa detect() { return avx2::supported() ? Isa::Avx2 : Isa::Scalar; }

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::Scalar};
  if (avx2::supported()) out.push_back(Isa::Avx2);
  return out;
}

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (isa == Isa::Avx2 && !avx2::supported()) {
    throw InvalidArgument("kernels: avx2 requested but not supported on this CPU");
  }
  current().store(isa, std::memory_order_relaxed);
}

void reset_isa() { current().store(detect(), std::memory_order_relaxed); }

template <class T>
const KernelSet<T>& kernel_set(Isa isa) {
  return isa == Isa::Avx2 ? avx2::set<T>() : scalar::set<T>();
}

template const KernelSet<float>& kernel_set<float>(Isa);
template const KernelSet<double>& kernel_set<double>(Isa);

}  // namespace jrt::kernels
