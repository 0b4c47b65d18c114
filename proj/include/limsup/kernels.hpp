#pragma once

#include <cstddef>
#include <string>

namespace limsup {

// Hot data-parallel loops behind the Monte Carlo estimators. The scalar
// implementations are the reference semantics; the AVX2 variants must agree
// bit-exactly for the distance/max kernels and to <= 1e-12 relative error for
// pow_neg (verified by the kernel equivalence tests). Accumulations happen in
// the caller in a fixed order, so kernel choice never reorders sums.
struct Kernels {
  // out[i] = circle distance of a[i], c[i]; inputs in [0, 1).
  void (*circle_dist)(const double* a, const double* c, double* out, size_t n);
  // acc[i] = max(acc[i], v[i])
  void (*max_inplace)(double* acc, const double* v, size_t n);
  // out[i] = z[i]^(-t); z[i] > 0
  void (*pow_neg)(const double* z, double* out, size_t n, double t);
  const char* name;
};

// Active kernel set. Selection happens once: LIMSUP_LAB_KERNEL=scalar|avx2|auto
// (default auto picks AVX2 when the CPU supports it).
const Kernels& active_kernels();

// Named lookup for tests; returns nullptr when the variant cannot run here.
const Kernels* kernels_by_name(const std::string& name);

extern const Kernels kScalarKernels;
#if defined(__x86_64__) || defined(_M_X64)
extern const Kernels kAvx2Kernels;
bool cpu_has_avx2();
#endif

}  // namespace limsup
