#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace limsup {

struct LinFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r2 = 1.0;
  size_t n = 0;
};

inline LinFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  LinFit f;
  f.n = xs.size();
  if (f.n < 2) return f;
  double sx = 0, sy = 0;
  for (size_t i = 0; i < f.n; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / f.n, my = sy / f.n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < f.n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (size_t i = 0; i < f.n; ++i) {
    const double e = ys[i] - (f.intercept + f.slope * xs[i]);
    sse += e * e;
  }
  if (f.n > 2) f.stderr_slope = std::sqrt(sse / static_cast<double>(f.n - 2) / sxx);
  f.r2 = (syy > 0) ? 1.0 - sse / syy : 1.0;
  return f;
}

}  // namespace limsup
