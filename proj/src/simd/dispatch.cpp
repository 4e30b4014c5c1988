#include <cstdlib>
#include <string_view>

#include "deepsep/simd.hpp"
#include "kernels_internal.hpp"

namespace deepsep::simd {
namespace {

bool CpuHasAvx2() {
#if defined(DEEPSEP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& Select() {
  const char* env = std::getenv("DEEPSEP_SIMD");
  const std::string_view want = env ? env : "";
  if (want == "scalar") return scalar_kernels();
  if (const KernelTable* wide = avx2_kernels()) return *wide;
  return scalar_kernels();
}

}  // namespace

const KernelTable* avx2_kernels() {
#if defined(DEEPSEP_HAVE_AVX2)
  static const bool supported = CpuHasAvx2();
  return supported ? &detail::avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& kernels() {
  static const KernelTable& active = Select();
  return active;
}

}  // namespace deepsep::simd
