#pragma once

// Data-parallel inner loops used by the feature extractor and the
// distance-based statistics. Every kernel has a portable scalar reference;
// wider variants are selected once at runtime from the CPU feature set and
// must agree with the reference (see tests/test_simd.cpp).

#include <cstddef>
#include <span>
#include <string_view>

namespace deepsep::simd {

struct KernelTable {
  std::string_view name;

  // sum_i (a[i] - b[i])^2
  double (*squared_distance_f64)(const double* a, const double* b, std::size_t n);
  double (*squared_distance_f32)(const float* a, const float* b, std::size_t n);

  // Sum of floats accumulated in double.
  double (*sum_f32)(const float* x, std::size_t n);

  // C[M x N] += A[M x K] * B[K x N], all row-major with explicit strides.
  void (*gemm_f32)(std::size_t m, std::size_t n, std::size_t k,
                   const float* a, std::size_t lda,
                   const float* b, std::size_t ldb,
                   float* c, std::size_t ldc);

  // x[i] = max(x[i], 0)
  void (*relu_f32)(float* x, std::size_t n);

  // y[i] = x[i] * scale + shift
  void (*affine_f32)(const float* x, float* y, std::size_t n, float scale, float shift);
};

const KernelTable& scalar_kernels();

// Returns nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_kernels();

// Active table. Honors DEEPSEP_SIMD=scalar|avx2 when set.
const KernelTable& kernels();

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return kernels().squared_distance_f64(a.data(), b.data(), a.size());
}

inline double squared_distance(std::span<const float> a, std::span<const float> b) {
  return kernels().squared_distance_f32(a.data(), b.data(), a.size());
}

}  // namespace deepsep::simd
