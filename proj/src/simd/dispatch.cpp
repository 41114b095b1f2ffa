#include <atomic>
#include <cstdlib>
#include <string_view>

#include "emass/simd/kernels.hpp"

namespace emass::simd {

#if defined(EMASS_HAVE_AVX2)
const KernelTable& avx2_kernel_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(EMASS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* detect() {
  if (const char* env = std::getenv("EMASS_SIMD"); env && std::string_view(env) == "scalar") {
    return &scalar_kernels();
  }
  if (const auto* avx2 = avx2_kernels()) return avx2;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{detect()};
  return table;
}

}  // namespace

const KernelTable* avx2_kernels() {
#if defined(EMASS_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &avx2_kernel_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& kernels() { return *current().load(std::memory_order_acquire); }

Isa active_isa() { return &kernels() == &scalar_kernels() ? Isa::Scalar : Isa::Avx2; }

void select_isa(Isa isa) {
  const KernelTable* table = &scalar_kernels();
  if (isa == Isa::Avx2 && avx2_kernels()) table = avx2_kernels();
  current().store(table, std::memory_order_release);
}

}  // namespace emass::simd
