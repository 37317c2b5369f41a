#include <atomic>
#include <cstdlib>
#include <cstring>
#include <string>

#include "eit3d/errors.hpp"
#include "eit3d/kernels.hpp"

namespace eit3d::kern {

#if defined(__x86_64__) || defined(_M_X64)
const Kernels& avx2_impl();  // kernels_avx2.cpp
bool avx2_available() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#else
bool avx2_available() { return false; }
#endif

namespace {
std::atomic<const Kernels*> g_active{nullptr};

const Kernels* pick_auto() {
#if defined(__x86_64__) || defined(_M_X64)
  if (avx2_available()) return &avx2_impl();
#endif
  return &scalar();
}

const Kernels* resolve(const char* name) {
  if (std::strcmp(name, "auto") == 0) return pick_auto();
  if (std::strcmp(name, "scalar") == 0) return &scalar();
#if defined(__x86_64__) || defined(_M_X64)
  if (std::strcmp(name, "avx2") == 0) {
    if (!avx2_available()) throw ConfigError("EIT3D_SIMD=avx2 requested but CPU lacks AVX2/FMA");
    return &avx2_impl();
  }
#endif
  throw ConfigError(std::string("unknown kernel implementation: ") + name);
}
}  // namespace

const Kernels& active() {
  const Kernels* k = g_active.load(std::memory_order_acquire);
  if (!k) {
    const char* env = std::getenv("EIT3D_SIMD");
    k = resolve(env ? env : "auto");
    g_active.store(k, std::memory_order_release);
  }
  return *k;
}

void select(const char* name) { g_active.store(resolve(name), std::memory_order_release); }

}  // namespace eit3d::kern
