#include <cstdlib>
#include <string>

#include "limsup/kernels.hpp"

namespace limsup {

namespace {

const Kernels* select() {
  const char* env = std::getenv("LIMSUP_LAB_KERNEL");
  const std::string want = env ? env : "auto";
  if (want == "scalar") return &kScalarKernels;
#if defined(__x86_64__) || defined(_M_X64)
  if (want == "avx2") {
    if (cpu_has_avx2()) return &kAvx2Kernels;
    return &kScalarKernels;  // requested but unavailable; fall back
  }
  if (cpu_has_avx2()) return &kAvx2Kernels;
#endif
  return &kScalarKernels;
}

}  // namespace

const Kernels& active_kernels() {
  static const Kernels* chosen = select();
  return *chosen;
}

const Kernels* kernels_by_name(const std::string& name) {
  if (name == "scalar") return &kScalarKernels;
#if defined(__x86_64__) || defined(_M_X64)
  if (name == "avx2" && cpu_has_avx2()) return &kAvx2Kernels;
#endif
  return nullptr;
}

}  // namespace limsup
