#pragma once

#include "shadowphase/kernels.hpp"

namespace shadowphase::kernels {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;

#if defined(SHADOWPHASE_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

}  // namespace shadowphase::kernels
