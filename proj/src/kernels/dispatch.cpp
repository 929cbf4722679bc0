#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace shadowphase::kernels {

const KernelTable* avx2() {
#if defined(SHADOWPHASE_HAVE_AVX2)
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    const char* forced = std::getenv("SHADOWPHASE_KERNELS");
    if (forced != nullptr && std::string_view{forced} == "scalar") {
      return scalar();
    }
    if (const KernelTable* t = avx2()) return *t;
    return scalar();
  }();
  return chosen;
}

}  // namespace shadowphase::kernels
