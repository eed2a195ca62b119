#include <cstdlib>
#include <cstring>

#include "csc/simd.hpp"

namespace csc::simd {
namespace {

bool cpu_has_avx2() {
#if defined(CSC_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels& pick() {
  const char* forced = std::getenv("CSC_SIMD");
  if (forced != nullptr && *forced != '\0') {
    if (std::strcmp(forced, "scalar") == 0) return scalar::table;
    if (std::strcmp(forced, "avx2") == 0 && kernels_for(Isa::avx2)) return *kernels_for(Isa::avx2);
    if (std::strcmp(forced, "neon") == 0 && kernels_for(Isa::neon)) return *kernels_for(Isa::neon);
  }
  if (const Kernels* k = kernels_for(Isa::avx2)) return *k;
  if (const Kernels* k = kernels_for(Isa::neon)) return *k;
  return scalar::table;
}

}  // namespace

const Kernels* kernels_for(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return &scalar::table;
    case Isa::avx2:
#if defined(CSC_HAVE_AVX2_KERNELS)
      if (cpu_has_avx2()) return &avx2::table;
#endif
      return nullptr;
    case Isa::neon:
#if defined(CSC_HAVE_NEON_KERNELS)
      return &neon::table;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const Kernels& active() {
  static const Kernels& chosen = pick();
  return chosen;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace csc::simd
