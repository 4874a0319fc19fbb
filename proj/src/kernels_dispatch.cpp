#include "nebo/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <cpuid.h>
#endif

namespace nebo::kern {

#if NEBO_BUILD_AVX2
const Ops* avx2_ops_impl();
#endif

namespace {

#if defined(__x86_64__) || defined(_M_X64)
unsigned long long read_xcr0() {
  unsigned int eax, edx;
  __asm__("xgetbv" : "=a"(eax), "=d"(edx) : "c"(0));
  return (static_cast<unsigned long long>(edx) << 32) | eax;
}
#endif

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(_M_X64)
  unsigned eax, ebx, ecx, edx;
  if (!__get_cpuid(1, &eax, &ebx, &ecx, &edx)) return false;
  const bool osxsave = ecx & (1u << 27);
  const bool fma = ecx & (1u << 12);
  if (!osxsave || !fma) return false;
  // OS must save ymm state
  if ((read_xcr0() & 0x6) != 0x6) return false;
  if (!__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) return false;
  return ebx & (1u << 5);  // AVX2
#else
  return false;
#endif
}

}  // namespace

const Ops* avx2_ops() {
#if NEBO_BUILD_AVX2
  static const Ops* ops = cpu_has_avx2_fma() ? avx2_ops_impl() : nullptr;
  return ops;
#else
  return nullptr;
#endif
}

const Ops& active() {
  static const Ops& ops = []() -> const Ops& {
    if (const Ops* simd = avx2_ops()) return *simd;
    return scalar_ops();
  }();
  return ops;
}

}  // namespace nebo::kern
