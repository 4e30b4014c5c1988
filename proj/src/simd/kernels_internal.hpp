#pragma once

#include "deepsep/simd.hpp"

namespace deepsep::simd::detail {

#if defined(DEEPSEP_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace deepsep::simd::detail
