#pragma once

#include <cstdint>
#include <vector>

#include "limsup/cubes.hpp"
#include "limsup/stats.hpp"

namespace limsup {

struct DimReport {
  double slope = 0.0;
  double stderr_ = 0.0;
  double r2 = 1.0;
  std::vector<int> levels;       // levels used after the saturation drop
  std::vector<uint64_t> counts;  // N(n) for the used levels
};

struct UndefinedDimension : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Box-counting slope: least squares of log N(n) against n log(1/b), where
// N(n) counts level-n ancestors of F. Levels saturated at the full cube count
// are dropped (they flatten limsup approximations toward s) unless fewer than
// three levels would remain.
DimReport box_dimension(const CubeTree& tree, const CubeSet& F, std::vector<int> levels);

// Measure-preserving isometries usable at cube resolution: torus translations
// snapped to the grid of F's level, and per-level digit permutations on
// symbolic spaces.
struct IsometryMap {
  enum class Kind { TorusTranslate, DigitPermute } kind = Kind::TorusTranslate;
  std::vector<int64_t> cell_offsets;               // per dimension, at the set's level
  std::vector<std::vector<uint8_t>> level_perms;   // per level, permutation of digits

  static IsometryMap torus_translate(std::vector<int64_t> offsets);
  static IsometryMap digit_permute(std::vector<std::vector<uint8_t>> perms);
};

struct InvalidMap : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

CubeSet apply_map(const CubeTree& tree, const CubeSet& F, const IsometryMap& map);

// Draws a random snapped map of the kind suiting the space.
IsometryMap random_map(const CubeTree& tree, int level, uint64_t seed);

struct IntersectionLabRow {
  int k = 0;          // number of maps applied (0 = F itself)
  bool empty = false;
  DimReport report;   // valid when not empty
  bool pass = false;  // slope >= t_ref - tol
};

struct IntersectionLabResult {
  std::vector<IntersectionLabRow> rows;
  bool all_pass = false;
  double t_ref = 0.0, tol = 0.0;
};

// Intersects F with f_1(F), ..., f_k(F) at F's resolution and box-counts each
// prefix; a prefix passes when its slope stays above t_ref - tol.
IntersectionLabResult intersection_lab(const CubeTree& tree, const CubeSet& F,
                                       const std::vector<IsometryMap>& maps,
                                       std::vector<int> levels, double t_ref,
                                       double tol = 0.15);

}  // namespace limsup
