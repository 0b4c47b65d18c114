#pragma once

#include <cstdint>
#include <vector>

#include "limsup/cubes.hpp"
#include "limsup/dimension.hpp"

namespace limsup {

// Per-level survival probabilities P_n(Q). Built-ins are analytic, so the
// decay indices come from the rule itself rather than sampled covariances.
struct SurvivalRule {
  enum class Kind { Uniform, FirstDigitSplit, Constant } kind = Kind::Uniform;
  double gamma = 0.5;    // Uniform: P_n = b^{n gamma}
  double gamma_b = 0.5;  // FirstDigitSplit: gamma on the 0-branch, gamma_b elsewhere
  double p = 1.0;        // Constant

  static SurvivalRule uniform(double g);
  static SurvivalRule first_digit_split(double ga, double gb);
  static SurvivalRule constant(double p);

  double probability(const CubeTree& tree, int n, uint64_t path) const;
  // exact per-level extremes of P_n over the level
  std::pair<double, double> min_max_probability(const CubeTree& tree, int n) const;
};

struct Dependence {
  enum class Kind { Independent, BlockCoupled } kind = Kind::Independent;
  double delta_prime = 0.0;  // block-coupled: blocks of ceil(b^{-n delta'}) cubes

  static Dependence independent() { return {}; }
  static Dependence block_coupled(double dp) { return {Kind::BlockCoupled, dp}; }
};

struct RandomFractalModel {
  SurvivalRule survival;
  Dependence dependence;
  uint64_t seed = 1;
};

// Surviving level-n cubes; one coin per cube (or per block), keyed by
// (seed, n, path), so realizations are independent of evaluation order.
CubeSet simulate_level(const RandomFractalModel& model, const CubeTree& tree, int n);

uint64_t block_size(const CubeTree& tree, const Dependence& dep, int n);

struct IndexLevelRow {
  int n = 0;
  double max_log = 0.0;  // max_Q log_{1/b} P_n(Q) / n
  double min_log = 0.0;
  double f_n = 1.0;  // Correlation Condition count at the reported epsilon
};

struct IndexReport {
  double gamma1_hat = 0.0;
  double gamma2_hat = 0.0;
  double delta_hat = 0.0;
  double epsilon = 0.01;
  std::vector<IndexLevelRow> per_level;
};

// Analytic indices for the built-in rules; throws for non-analytic setups.
IndexReport empirical_indices(const RandomFractalModel& model, const CubeTree& tree,
                              const std::vector<int>& n_range, double epsilon = 0.01);

struct FractalExperimentConfig {
  std::vector<int> n_range;  // simulated levels
  int windows = 4;           // dyadic windows [2^k, 2^{k+1}) over levels
  std::vector<int> count_levels;
  double tol = 0.2;
};

struct FractalExperimentResult {
  bool extinct = false;
  int extinct_window = -1;
  DimReport report;
  double bound_lo = 0.0, bound_hi = 0.0;  // max(0, s-gamma2-delta), max(0, s-gamma1)
  bool in_bounds = false;
  CubeSet approximation;
};

// Finite limsup surrogate: intersection over dyadic level windows of the
// union of surviving levels, box-counted.
FractalExperimentResult fractal_dimension_experiment(const RandomFractalModel& model,
                                                     const CubeTree& tree,
                                                     const FractalExperimentConfig& cfg);

}  // namespace limsup
