#include <algorithm>
#include <cmath>

#include "limsup/kernels.hpp"

namespace limsup {

namespace {

void circle_dist_scalar(const double* a, const double* c, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    const double t = std::fabs(a[i] - c[i]);
    out[i] = std::min(t, 1.0 - t);
  }
}

void max_inplace_scalar(double* acc, const double* v, size_t n) {
  for (size_t i = 0; i < n; ++i) acc[i] = std::max(acc[i], v[i]);
}

void pow_neg_scalar(const double* z, double* out, size_t n, double t) {
  for (size_t i = 0; i < n; ++i) out[i] = std::pow(z[i], -t);
}

}  // namespace

const Kernels kScalarKernels = {circle_dist_scalar, max_inplace_scalar, pow_neg_scalar,
                                "scalar"};

}  // namespace limsup
