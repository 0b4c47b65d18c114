#include "limsup/space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace limsup {

SpaceDescriptor SpaceDescriptor::torus(int d) {
  SpaceDescriptor sp;
  sp.kind = SpaceKind::Torus;
  sp.d = d;
  return sp;
}

SpaceDescriptor SpaceDescriptor::symbolic(int m, double b, int depth) {
  SpaceDescriptor sp;
  sp.kind = SpaceKind::Symbolic;
  sp.m = m;
  sp.b = b;
  sp.depth = depth;
  return sp;
}

SpaceDescriptor SpaceDescriptor::cantor3(int depth) {
  SpaceDescriptor sp;
  sp.kind = SpaceKind::Cantor3;
  sp.depth = depth;
  return sp;
}

SpaceDescriptor SpaceDescriptor::product(std::vector<SpaceDescriptor> fs) {
  SpaceDescriptor sp;
  sp.kind = SpaceKind::Product;
  sp.factors = std::move(fs);
  return sp;
}

double SpaceDescriptor::s() const {
  switch (kind) {
    case SpaceKind::Torus:
      return static_cast<double>(d);
    case SpaceKind::Symbolic:
      return std::log(static_cast<double>(m)) / std::log(1.0 / b);
    case SpaceKind::Cantor3:
      return std::log(2.0) / std::log(3.0);
    case SpaceKind::Product: {
      double acc = 0.0;
      for (const auto& f : factors) acc += f.s();
      return acc;
    }
  }
  return 0.0;
}

double SpaceDescriptor::regularity_C() const {
  switch (kind) {
    case SpaceKind::Torus:
      return std::pow(2.0, d);
    case SpaceKind::Symbolic:
      return static_cast<double>(m);
    case SpaceKind::Cantor3:
      // mu(B) <= 3*(2r)^s and mu(B) >= (r/3)^s = r^s/2 give the two-sided
      // bound with constant 3*2^s (the lower side needs only 2).
      return 3.0 * std::pow(2.0, s());
    case SpaceKind::Product: {
      double acc = 1.0;
      for (const auto& f : factors) acc *= f.regularity_C();
      return acc;
    }
  }
  return 1.0;
}

double SpaceDescriptor::diameter() const {
  switch (kind) {
    case SpaceKind::Torus:
      return 0.5;
    case SpaceKind::Symbolic:
      return 1.0;
    case SpaceKind::Cantor3:
      return 1.0;
    case SpaceKind::Product: {
      double acc = 0.0;
      for (const auto& f : factors) acc = std::max(acc, f.diameter());
      return acc;
    }
  }
  return 0.0;
}

double SpaceDescriptor::resolution_floor() const {
  switch (kind) {
    case SpaceKind::Torus:
      return 1e-12;
    case SpaceKind::Symbolic:
      return std::pow(b, depth);
    case SpaceKind::Cantor3:
      return std::pow(3.0, -depth);
    case SpaceKind::Product: {
      double acc = 0.0;
      for (const auto& f : factors) acc = std::max(acc, f.resolution_floor());
      return acc;
    }
  }
  return 0.0;
}

bool SpaceDescriptor::validate(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  switch (kind) {
    case SpaceKind::Torus:
      if (d < 1 || d > 8) return fail("torus dimension must be in [1, 8]");
      return true;
    case SpaceKind::Symbolic:
      if (m < 2) return fail("symbolic alphabet must have m >= 2");
      if (!(b > 0.0 && b < 1.0)) return fail("symbolic ratio must be in (0, 1)");
      if (depth < 1 || depth > 512) return fail("working depth out of range");
      return true;
    case SpaceKind::Cantor3:
      if (depth < 1 || depth > 512) return fail("working depth out of range");
      return true;
    case SpaceKind::Product:
      if (factors.size() < 2) return fail("product needs at least two factors");
      for (const auto& f : factors) {
        if (f.kind == SpaceKind::Product) return fail("nested products are not supported");
        if (!f.validate(why)) return false;
      }
      return true;
  }
  return fail("unknown space kind");
}

std::string SpaceDescriptor::name() const {
  switch (kind) {
    case SpaceKind::Torus:
      return "torus" + std::to_string(d);
    case SpaceKind::Symbolic:
      return "symbolic(" + std::to_string(m) + "," + std::to_string(b) + ")";
    case SpaceKind::Cantor3:
      return "cantor3";
    case SpaceKind::Product: {
      std::string out;
      for (size_t i = 0; i < factors.size(); ++i) {
        if (i) out += "x";
        out += factors[i].name();
      }
      return out;
    }
  }
  return "?";
}

double circle_dist(double a, double c) {
  double t = std::fabs(a - c);
  t -= std::floor(t);
  return std::min(t, 1.0 - t);
}

namespace {

double digit_distance(double b, std::span<const uint8_t> x, std::span<const uint8_t> y) {
  const size_t n = std::min(x.size(), y.size());
  for (size_t k = 0; k < n; ++k) {
    if (x[k] != y[k]) return std::pow(b, static_cast<double>(k));
  }
  return 0.0;  // identical to working depth
}

void check_point(const SpaceDescriptor& sp, const Point& p) {
  switch (sp.kind) {
    case SpaceKind::Torus:
      if (p.xs.size() != static_cast<size_t>(sp.d))
        throw std::invalid_argument("point/space mismatch: torus coordinate count");
      return;
    case SpaceKind::Symbolic:
    case SpaceKind::Cantor3:
      if (p.digits.empty()) throw std::invalid_argument("point/space mismatch: digits required");
      return;
    case SpaceKind::Product:
      if (p.parts.size() != sp.factors.size())
        throw std::invalid_argument("point/space mismatch: product arity");
      return;
  }
}

}  // namespace

double distance(const SpaceDescriptor& sp, const Point& x, const Point& y) {
  check_point(sp, x);
  check_point(sp, y);
  switch (sp.kind) {
    case SpaceKind::Torus: {
      double acc = 0.0;
      for (int i = 0; i < sp.d; ++i) acc = std::max(acc, circle_dist(x.xs[i], y.xs[i]));
      return acc;
    }
    case SpaceKind::Symbolic:
      return digit_distance(sp.b, x.digits, y.digits);
    case SpaceKind::Cantor3:
      return std::fabs(cantor_value(x.digits) - cantor_value(y.digits));
    case SpaceKind::Product: {
      double acc = 0.0;
      for (size_t i = 0; i < sp.factors.size(); ++i)
        acc = std::max(acc, distance(sp.factors[i], x.parts[i], y.parts[i]));
      return acc;
    }
  }
  return 0.0;
}

double cantor_value(std::span<const uint8_t> digits) {
  double acc = 0.0;
  double scale = 1.0 / 3.0;
  for (uint8_t a : digits) {
    acc += (a ? 2.0 : 0.0) * scale;
    scale /= 3.0;
  }
  return acc;
}

double cantor_cdf(double y) {
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  double acc = 0.0;
  double scale = 0.5;
  for (int k = 0; k < 60; ++k) {
    y *= 3.0;
    int dgt = static_cast<int>(y);
    y -= dgt;
    if (dgt == 1) return acc + scale;
    if (dgt >= 2) acc += scale;
    scale *= 0.5;
    if (y <= 0.0) break;
  }
  return acc;
}

double cantor_sup_below(double y) {
  if (y < 0.0) return -1.0;
  if (y >= 1.0) return 1.0;
  // Walk ternary digits of y; on digit 1 the answer closes with all-2 tail.
  double lo = 0.0, len = 1.0;
  for (int k = 0; k < 60; ++k) {
    len /= 3.0;
    double f = (y - lo) / len;  // in [0,3)
    if (f >= 2.0) {
      lo += 2.0 * len;
    } else if (f >= 1.0) {
      return lo + len;  // right endpoint of child 0
    }
    // digit 0: stay
  }
  return lo;
}

double cantor_inf_above(double y) {
  if (y <= 0.0) return 0.0;
  if (y > 1.0) return 2.0;
  double lo = 0.0, len = 1.0;
  for (int k = 0; k < 60; ++k) {
    len /= 3.0;
    double f = (y - lo) / len;
    if (f >= 2.0) {
      lo += 2.0 * len;
    } else if (f > 1.0) {
      return lo + 2.0 * len;  // left endpoint of child 2
    }
  }
  return lo;
}

namespace {

int smallest_power_below(double b, double r) {
  // smallest k >= 0 with b^k < r  (requires 0 < r)
  if (r > 1.0) return 0;
  int k = std::max(0, static_cast<int>(std::floor(std::log(r) / std::log(b))) - 2);
  while (std::pow(b, k) >= r) ++k;
  while (k > 0 && std::pow(b, k - 1) < r) --k;
  return k;
}

}  // namespace

double measure_ball(const SpaceDescriptor& sp, const Ball& ball) {
  if (ball.radius <= 0.0) return 0.0;
  const double r = ball.radius;
  switch (sp.kind) {
    case SpaceKind::Torus: {
      double acc = 1.0;
      for (int i = 0; i < sp.d; ++i) acc *= std::min(2.0 * r, 1.0);
      return acc;
    }
    case SpaceKind::Symbolic: {
      const int k = smallest_power_below(sp.b, r);  // ball = cylinder of depth k
      return std::pow(static_cast<double>(sp.m), -k);
    }
    case SpaceKind::Cantor3: {
      check_point(sp, ball.center);
      const double x = cantor_value(ball.center.digits);
      return cantor_cdf(std::min(1.0, x + r)) - cantor_cdf(std::max(0.0, x - r));
    }
    case SpaceKind::Product: {
      check_point(sp, ball.center);
      double acc = 1.0;
      for (size_t i = 0; i < sp.factors.size(); ++i)
        acc *= measure_ball(sp.factors[i], Ball{ball.center.parts[i], r});
      return acc;
    }
  }
  return 0.0;
}

Point sample_point(const SpaceDescriptor& sp, RngStream& rng) {
  Point p;
  switch (sp.kind) {
    case SpaceKind::Torus:
      p.xs.resize(sp.d);
      for (int i = 0; i < sp.d; ++i) p.xs[i] = rng.next_unit();
      return p;
    case SpaceKind::Symbolic:
      p.digits.resize(sp.depth);
      for (int i = 0; i < sp.depth; ++i)
        p.digits[i] = static_cast<uint8_t>(rng.next_below(sp.m));
      return p;
    case SpaceKind::Cantor3:
      p.digits.resize(sp.depth);
      for (int i = 0; i < sp.depth; ++i) p.digits[i] = static_cast<uint8_t>(rng.next_below(2));
      return p;
    case SpaceKind::Product:
      p.parts.reserve(sp.factors.size());
      for (const auto& f : sp.factors) p.parts.push_back(sample_point(f, rng));
      return p;
  }
  return p;
}

Point torus_point(std::span<const double> xs) {
  Point p;
  p.xs.assign(xs.begin(), xs.end());
  for (double& v : p.xs) v -= std::floor(v);
  return p;
}

Point digit_point(std::span<const uint8_t> digits) {
  Point p;
  p.digits.assign(digits.begin(), digits.end());
  return p;
}

Point product_point(std::vector<Point> parts) {
  Point p;
  p.parts = std::move(parts);
  return p;
}

Point digit_point_from_string(const SpaceDescriptor& sp, const std::string& digits) {
  Point p;
  p.digits.reserve(sp.depth);
  for (char c : digits) {
    if (c < '0' || c > '9') throw std::invalid_argument("digit string must be numeric");
    p.digits.push_back(static_cast<uint8_t>(c - '0'));
  }
  while (static_cast<int>(p.digits.size()) < sp.depth) p.digits.push_back(0);
  const int lim = (sp.kind == SpaceKind::Cantor3) ? 2 : sp.m;
  for (uint8_t a : p.digits)
    if (a >= lim) throw std::invalid_argument("digit out of range for alphabet");
  return p;
}

AuditResult regularity_audit(const SpaceDescriptor& sp, uint64_t trials, uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("regularity_audit needs trials >= 1");
  AuditResult res;
  res.declared_C = sp.regularity_C();
  res.trials = trials;
  const double s = sp.s();
  const double diam = sp.diameter();
  const double r_min = std::max(1e-9, sp.resolution_floor());
  const double log_lo = std::log(r_min), log_hi = std::log(diam);
  RngStream rng(key_chain(seed, TAG_AUDIT));
  for (uint64_t i = 0; i < trials; ++i) {
    Point x = sample_point(sp, rng);
    const double r = std::exp(log_lo + (log_hi - log_lo) * rng.next_unit());
    const double mu = measure_ball(sp, Ball{x, r});
    const double rs = std::pow(r, s);
    if (mu <= 0.0) continue;  // below resolution: cannot witness either side
    const double up = mu / rs, lo = rs / mu;
    if (up > res.worst_upper) {
      res.worst_upper = up;
      res.upper_witness = {Ball{x, r}, up};
    }
    if (lo > res.worst_lower) {
      res.worst_lower = lo;
      res.lower_witness = {Ball{x, r}, lo};
    }
  }
  res.pass = res.worst_upper <= res.declared_C * (1.0 + 1e-12) &&
             res.worst_lower <= res.declared_C * (1.0 + 1e-12);
  return res;
}

std::vector<Ball> vitali_5r(const SpaceDescriptor& sp, std::span<const Ball> balls) {
  std::vector<size_t> order(balls.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return balls[a].radius > balls[b].radius;
  });
  std::vector<Ball> kept;
  for (size_t idx : order) {
    const Ball& cand = balls[idx];
    if (cand.radius <= 0.0) continue;
    bool ok = true;
    for (const Ball& k : kept) {
      if (distance(sp, cand.center, k.center) <= cand.radius + k.radius) {
        ok = false;
        break;
      }
    }
    if (ok) kept.push_back(cand);
  }
  return kept;
}

}  // namespace limsup
