#pragma once

#include <cstdint>
#include <vector>

#include "limsup/cubes.hpp"

namespace limsup {

struct NetContentResult {
  double value = 0.0;
  std::vector<CubeId> cover;  // an optimal antichain cover of F within the cube
  double t = 0.0;
};

// Net content of a finite-resolution set F at exponent t: exact infimum of
// sum mu(Q_i)^{t/s} over tree-cube covers of F inside `within`, computed by
// bottom-up dynamic programming. Cubes coarser than `within` never beat it
// (mu^{t/s} is monotone), and cubes finer than F's level never beat their
// parents at t <= s, so the DP over levels [within.level, F.level] is the
// true infimum; the brute-force oracle validates this on small instances.
NetContentResult net_content(const CubeTree& tree, const CubeSet& F, double t,
                             const CubeId& within = {});

// Exhaustive enumeration of every antichain cover (oracle for the DP).
// Refuses subtrees deeper than 4 levels or wider than the enumeration cap.
double net_content_bruteforce(const CubeTree& tree, const CubeSet& F, double t,
                              const CubeId& within = {});

struct EnumerationTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LiCertificate {
  double t = 0.0;
  int max_depth = 0;
  double min_c = 1.0;
  CubeId argmin;
  bool has_empty_cube = false;  // some cube up to max_depth misses F entirely
  std::vector<uint64_t> histogram;  // 20 bins over (0, 1]; zeros counted in bin 0
  std::vector<double> per_level_min;
};

// c(Q) = net_content(F, t, Q) / mu(Q)^{t/s} over every cube with level
// <= max_depth; the certificate passes at (t, max_depth) when min c > 0.
LiCertificate li_certificate(const CubeTree& tree, const CubeSet& F, double t, int max_depth);

}  // namespace limsup
