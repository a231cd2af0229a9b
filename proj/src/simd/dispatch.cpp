#include <cstdlib>
#include <string_view>

#include "cavkit/simd/kernels.hpp"

namespace cavkit::simd {
namespace {

bool cpu_has_avx2() {
#if defined(CAVKIT_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() {
  std::string_view forced;
  if (const char* env = std::getenv("CAVKIT_SIMD")) forced = env;
  for (const KernelTable* table : available_kernels()) {
    if (!forced.empty() && table->name == forced) return *table;
  }
  // Widest available variant wins unless overridden.
  return *available_kernels().back();
}

}  // namespace

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
#if defined(CAVKIT_HAVE_AVX2_TU)
  if (cpu_has_avx2()) out.push_back(&avx2_kernels());
#endif
#if defined(CAVKIT_HAVE_NEON_TU)
  out.push_back(&neon_kernels());
#endif
  return out;
}

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace cavkit::simd
