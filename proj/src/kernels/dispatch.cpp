#include <cstdlib>
#include <string_view>

#include "flipconc/kernels.hpp"

namespace flipconc::kernels {

#if defined(FLIPCONC_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

const KernelTable* avx2() {
#if defined(FLIPCONC_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable* chosen = [] {
    const char* force = std::getenv("FLIPCONC_SIMD");
    if (force != nullptr && std::string_view(force) == "scalar") return &scalar();
    if (const KernelTable* t = avx2()) return t;
    return &scalar();
  }();
  return *chosen;
}

}  // namespace flipconc::kernels
