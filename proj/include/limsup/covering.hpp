#pragma once

#include <cstdint>
#include <vector>

#include "limsup/cubes.hpp"
#include "limsup/dimension.hpp"
#include "limsup/netcontent.hpp"
#include "limsup/schedule.hpp"

namespace limsup {

struct S0Result {
  double s0 = 0.0;
  bool exact = true;        // closed form vs numeric bracketing
  bool conclusive = true;   // explicit lists can be too short to classify
  std::string note;
};

// critical exponent s0 = inf{t >= 0 : sum r_n^t < infinity}
S0Result s0(const RadiusSchedule& schedule);

// Stationary center process with marginal mu. The mixing kernel refreshes to
// a fresh uniform point with probability p and otherwise applies a fixed
// rotation; a refresh decouples past from future, which gives the exponential
// mixing bound |P(xi_1 in A | future beyond n) - mu(A)| <= (1-p)^n, i.e.
// c = 1 and gamma = 1 - p in the mixing definition.
struct CenterProcess {
  enum class Kind { IidUniform, MixingMarkov } kind = Kind::IidUniform;
  double refresh_p = 0.5;
  double rotation = 0.41421356237309515;  // sqrt(2)-1; any irrational works

  static CenterProcess iid() { return {}; }
  static CenterProcess mixing(double p, double rot = 0.41421356237309515) {
    return {Kind::MixingMarkov, p, rot};
  }
  double mixing_c() const { return 1.0; }
  double mixing_gamma() const { return 1.0 - refresh_p; }
};

std::vector<Point> draw_centers(const SpaceDescriptor& sp, const CenterProcess& proc,
                                uint64_t n_max, uint64_t seed);

struct CoveringSim {
  std::vector<CubeSet> windows;
  std::vector<std::pair<uint64_t, uint64_t>> window_ranges;  // [lo, hi] ball indices
  CubeSet intersection;  // finite-resolution E approximation
};

// K geometric index windows partitioning [1, nMax] (ratio nMax^{1/K}); each
// window is the outer cube cover of its balls, the E surrogate is their
// intersection.
CoveringSim simulate_covering(const CubeTree& tree, const CenterProcess& proc,
                              const RadiusSchedule& schedule, uint64_t n_max, int level,
                              int windows, uint64_t seed);

// mu of the tail unions cup_{n >= m} B_n at cube resolution, one per m,
// evaluated on a single realization; exactly non-increasing in m.
std::vector<double> tail_union_measures(const CubeTree& tree, const CenterProcess& proc,
                                        const RadiusSchedule& schedule, uint64_t n_max,
                                        int level, const std::vector<uint64_t>& ms,
                                        uint64_t seed);

struct CoveringExperimentResult {
  S0Result s0;
  double expected_dim = 0.0;  // min(s, s0); upper half is folklore, not this theory
  DimReport report;
  bool dim_ok = false;
  LiCertificate certificate;           // at t = 0.8 s0, coarse refinement
  std::vector<std::pair<int, double>> min_c_trend;  // (refinement level, min c)
  CubeSet approximation;
};

struct InsufficientResolution : std::runtime_error {
  using std::runtime_error::runtime_error;
};

CoveringExperimentResult covering_dimension_experiment(const CubeTree& tree,
                                                       const CenterProcess& proc,
                                                       const RadiusSchedule& schedule,
                                                       uint64_t n_max,
                                                       const std::vector<int>& levels,
                                                       int windows, uint64_t seed,
                                                       double tol = 0.2);

}  // namespace limsup
