#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "limsup/kernels.hpp"
#include "limsup/rng.hpp"

using namespace limsup;

namespace {

std::vector<double> random_units(size_t n, uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.next_unit();
  return v;
}

std::vector<double> random_log_uniform(size_t n, double lo, double hi, uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> v(n);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (auto& x : v) x = std::exp(llo + (lhi - llo) * rng.next_unit());
  return v;
}

}  // namespace

TEST_CASE("active kernel set resolves") {
  const auto& k = active_kernels();
  CHECK(k.circle_dist != nullptr);
  CHECK(k.pow_neg != nullptr);
  INFO("active kernels: ", k.name);
}

TEST_CASE("scalar kernels match direct formulas") {
  auto a = random_units(1003, 1);
  auto c = random_units(1003, 2);
  std::vector<double> out(a.size());
  kScalarKernels.circle_dist(a.data(), c.data(), out.data(), a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    const double t = std::fabs(a[i] - c[i]);
    CHECK(out[i] == std::min(t, 1.0 - t));
  }
}

#if defined(__x86_64__) || defined(_M_X64)

TEST_CASE("avx2 circle_dist and max_inplace are bit-exact vs scalar") {
  if (!cpu_has_avx2()) {
    MESSAGE("avx2 unavailable on this host; skipping");
    return;
  }
  auto a = random_units(4097, 3);
  auto c = random_units(4097, 4);
  std::vector<double> s(a.size()), v(a.size());
  kScalarKernels.circle_dist(a.data(), c.data(), s.data(), a.size());
  kAvx2Kernels.circle_dist(a.data(), c.data(), v.data(), a.size());
  CHECK(std::memcmp(s.data(), v.data(), s.size() * sizeof(double)) == 0);

  auto acc1 = random_units(4097, 5);
  auto acc2 = acc1;
  kScalarKernels.max_inplace(acc1.data(), s.data(), s.size());
  kAvx2Kernels.max_inplace(acc2.data(), v.data(), v.size());
  CHECK(std::memcmp(acc1.data(), acc2.data(), acc1.size() * sizeof(double)) == 0);
}

TEST_CASE("avx2 pow_neg within 1e-12 relative of std::pow") {
  if (!cpu_has_avx2()) {
    MESSAGE("avx2 unavailable on this host; skipping");
    return;
  }
  for (double t : {0.05, 0.25, 0.5, 0.75, 1.0, 1.5, 1.95}) {
    auto z = random_log_uniform(8191, 1e-12, 1.0, 17 + static_cast<uint64_t>(t * 100));
    std::vector<double> s(z.size()), v(z.size());
    kScalarKernels.pow_neg(z.data(), s.data(), z.size(), t);
    kAvx2Kernels.pow_neg(z.data(), v.data(), z.size(), t);
    double worst = 0.0;
    for (size_t i = 0; i < z.size(); ++i) {
      worst = std::max(worst, std::fabs(v[i] - s[i]) / s[i]);
    }
    INFO("t = ", t, " worst rel diff = ", worst);
    CHECK(worst <= 1e-12);
  }
}

#endif

TEST_CASE("kernels_by_name") {
  CHECK(kernels_by_name("scalar") != nullptr);
  CHECK(kernels_by_name("nope") == nullptr);
}
