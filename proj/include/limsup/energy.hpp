#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "limsup/cubes.hpp"
#include "limsup/schedule.hpp"
#include "limsup/space.hpp"

namespace limsup {

enum class EnergyMethod { ClosedForm, Recursion, MonteCarlo };

struct EnergyEstimate {
  double value = 0.0;
  double stderr_ = 0.0;  // 0 for exact methods
  uint64_t samples = 0;
  EnergyMethod method = EnergyMethod::ClosedForm;
  uint64_t resampled = 0;  // pairs redrawn below the resolution floor
};

struct DivergentEnergyError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Integration domain U. Rect is a product of per-coordinate arcs on torus
// coordinates (a max-metric rectangle); radii are per flattened coordinate.
struct Domain {
  enum class Kind { Whole, Ball, Cubes, Rect };
  Kind kind = Kind::Whole;
  Ball ball;
  CubeSet cubes;
  const CubeTree* tree = nullptr;
  Point rect_center;
  std::vector<double> rect_radii;

  static Domain whole() { return {}; }
  static Domain of_ball(Ball b) {
    Domain d;
    d.kind = Kind::Ball;
    d.ball = std::move(b);
    return d;
  }
  static Domain of_cubes(const CubeTree& t, CubeSet s) {
    Domain d;
    d.kind = Kind::Cubes;
    d.tree = &t;
    d.cubes = std::move(s);
    return d;
  }
  static Domain of_rect(Point center, std::vector<double> radii) {
    Domain d;
    d.kind = Kind::Rect;
    d.rect_center = std::move(center);
    d.rect_radii = std::move(radii);
    return d;
  }
};

double domain_measure(const SpaceDescriptor& sp, const Domain& dom);
// Exact sup-diameter of the domain (cube unions capped at 4096 members).
double domain_diameter(const SpaceDescriptor& sp, const Domain& dom);

// t-energy I_t(mu, U) with automatic method choice: closed form on torus
// rectangles/balls/whole space, prefix-split recursion on symbolic sets,
// Monte Carlo elsewhere. 0 <= t < s required.
EnergyEstimate energy(const SpaceDescriptor& sp, const Domain& dom, double t,
                      uint64_t budget = 1u << 20, uint64_t seed = 1);

// Same but with the method forced; throws std::invalid_argument when the
// combination has no exact path.
EnergyEstimate energy_with_method(const SpaceDescriptor& sp, const Domain& dom, double t,
                                  EnergyMethod method, uint64_t budget = 1u << 20,
                                  uint64_t seed = 1);

struct BoundsCheck {
  bool pass = false;
  bool lower_violated = false;  // beyond Monte Carlo error: estimator bug
  double value = 0.0, stderr_ = 0.0;
  double lower = 0.0, upper = 0.0;
  double C1 = 0.0;
  double measured_ratio = 0.0;  // I_t / (diam^{s-t} mu(U))
  double diam = 0.0, mu = 0.0;
};

// Two-sided energy bounds with the explicit constant
//   C1 = (C 2^s - C^{-1}) * 2^{t-s} / (1 - 2^{t-s}).
BoundsCheck energy_bounds_check(const SpaceDescriptor& sp, const Domain& dom, double t,
                                uint64_t budget = 1u << 17, uint64_t seed = 1);

// ---------------------------------------------------------------------------
// large-intersection index lambda (ratio boundedness over a t grid)

struct LambdaQuery {
  SpaceDescriptor space;
  RadiusSchedule schedule;
  enum class Rule { BallPower, Shrink, Rectangle } rule = Rule::BallPower;
  double t0 = 0.5;               // BallPower: enclosing ball is the t0-inflate
  double shrink_c = 0.5;         // Shrink: E_n = c B_n
  std::vector<double> rect_a;    // Rectangle: per-factor exponents, ascending
  std::vector<uint64_t> ns;      // indices probed
  std::vector<double> t_grid;    // within [0, s)
  double eps_slope = 0.05;
  uint64_t budget = 1u << 17;    // for Monte Carlo fallbacks
  uint64_t seed = 1;
};

struct LambdaRatioRow {
  double t = 0.0;
  uint64_t n = 0;
  double r = 0.0;
  double ratio = 0.0;
  double stderr_ = 0.0;
};

struct LambdaResult {
  double lambda_hat = 0.0;
  bool ambiguous = false;
  std::vector<double> slopes;        // per grid t: slope of log R vs log(1/r)
  std::vector<bool> bounded;         // per grid t
  std::vector<LambdaRatioRow> rows;  // full ratio table
};

struct AmbiguousClassification : std::runtime_error {
  using std::runtime_error::runtime_error;
};

LambdaResult lambda_index(const LambdaQuery& q);

}  // namespace limsup
