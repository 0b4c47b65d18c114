#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "limsup/space.hpp"

namespace limsup {

// Address of a generalized dyadic cube. Path digits are packed MSB-first into
// a 64-bit word with a fixed bit width per level, so the ancestor at level k
// is a right shift. Level 0 is the whole space.
struct CubeId {
  int level = 0;
  uint64_t path = 0;

  auto operator<=>(const CubeId&) const = default;
};

enum class CoverMode { Inner, Outer };

class CubeSet;

// Nested partition family with ball sandwiching
//   B(x_Q, c1 b^n)  subset  Q  subset  closed-B(x_Q, c1' b^n).
// Cells are the natural ones per space: b-adic boxes on the torus (1/b must
// be an integer), cylinders for symbolic/cantor, products of factor cells.
// Cube centers follow a fixed digit tail so that every level-n center is also
// a level-(n+1) center; the root center is the fixed point of that chain.
//
// Constants: for b < 1/3 the generic values c1 = 1/2 - b/(1-b), c1' = 1/(1-b)
// hold exactly for these cells and are used as declared. For the natural-cell
// cases with b >= 1/3 (cylinders, torus halves/thirds) the constants are
// recomputed exactly: cylinders get c1 = c1' = 1; torus q=2 gets 1/3 and 2/3;
// torus q=3 gets 1/2 and 1/2.
class CubeTree {
 public:
  static CubeTree build(const SpaceDescriptor& sp, double b, int max_level);

  const SpaceDescriptor& space() const { return space_; }
  double b() const { return b_; }
  int max_level() const { return max_level_; }
  double c1() const { return c1_; }
  double c1prime() const { return c1p_; }
  uint64_t branching() const { return branching_; }
  int bits_per_level() const { return bits_; }
  bool contiguous_paths() const { return branching_ == (uint64_t{1} << bits_); }

  uint64_t cube_count(int level) const;
  double cube_measure(int level) const;  // uniform across a level in all model spaces
  double inner_radius(int level) const;
  double outer_radius(int level) const;

  CubeId root() const { return {}; }
  CubeId parent(const CubeId& q) const;
  CubeId child(const CubeId& q, uint64_t digit) const;
  bool is_ancestor(const CubeId& anc, const CubeId& q) const;

  CubeId cube_containing(const Point& x, int level) const;
  Point cube_center(const CubeId& q) const;
  Point root_center() const { return cube_center(root()); }
  Point sample_in_cube(const CubeId& q, RngStream& rng) const;

  std::vector<uint32_t> digits_of(const CubeId& q) const;
  CubeId id_from_digits(int level, const std::vector<uint32_t>& digits) const;

  // Torus-only: per-dimension cell indices at the cube's level.
  std::vector<uint64_t> torus_indices(const CubeId& q) const;
  CubeId torus_id_from_indices(int level, const std::vector<uint64_t>& idx) const;

  // Sandwich-ball geometry (the meets/inside proxies used everywhere).
  bool outer_ball_meets(const CubeId& q, const Ball& ball) const;
  bool outer_ball_inside(const CubeId& q, const Ball& ball) const;

  // Inner mode: level-N cubes whose sandwich outer ball lies inside the ball.
  // Outer mode: level-N cubes whose sandwich outer ball meets the ball.
  CubeSet ball_to_cubeset(const Ball& ball, int level, CoverMode mode) const;

  // Same selection, appended to a reusable buffer (unsorted).
  void ball_paths(const Ball& ball, int level, CoverMode mode,
                  std::vector<uint64_t>& out) const;

  // Cubes at a level whose outer sandwich ball meets the closed ball; the
  // greedy doubling cover of Prop-style checks is built from these.
  std::vector<CubeId> cubes_meeting_closed_ball(const Ball& ball, int level) const;

  // Exact sup-distance between points of two cubes (same level), and of a
  // finite union; used for exact diameters in energy bound checks.
  double pair_sup_distance(const CubeId& a, const CubeId& bq) const;

  uint64_t next_path(uint64_t path, int level) const;  // mixed-radix increment

 private:
  SpaceDescriptor space_;
  double b_ = 0.5;
  int max_level_ = 0;
  double c1_ = 0.0, c1p_ = 0.0;
  uint64_t branching_ = 2;
  int bits_ = 1;
  int q_ = 2;  // torus subdivisions per side
  // center tail digits, 2-periodic; beta(level) = offset of center in cell units
  double beta_even_ = 0.5, beta_odd_ = 0.5;
  std::vector<CubeTree> factors_;  // product factors
  std::vector<int> factor_bits_;

  double beta(int level) const { return (level % 2 == 0) ? beta_even_ : beta_odd_; }
  void split_digit(uint64_t digit, std::vector<uint64_t>& parts) const;
  uint64_t join_digit(const std::vector<uint64_t>& parts) const;
  friend struct TreeWalker;
};

// Finite-resolution subset of X: a sorted set of same-level cube paths.
// Immutable value semantics; operations return new sets.
class CubeSet {
 public:
  CubeSet() = default;
  CubeSet(int level, std::vector<uint64_t> paths);  // sorts, dedups

  int level() const { return level_; }
  const std::vector<uint64_t>& paths() const { return paths_; }
  size_t size() const { return paths_.size(); }
  bool empty() const { return paths_.empty(); }
  bool contains(uint64_t path) const;

  double measure(const CubeTree& tree) const;

  CubeSet set_union(const CubeSet& other) const;
  CubeSet set_intersect(const CubeSet& other) const;
  CubeSet complement(const CubeTree& tree) const;
  CubeSet refine_to(const CubeTree& tree, int level) const;
  CubeSet ancestors_at(const CubeTree& tree, int level) const;

  std::vector<CubeId> ids() const;

  void serialize(const CubeTree& tree, std::ostream& os) const;
  static CubeSet deserialize(const CubeTree& tree, std::istream& is);

  bool operator==(const CubeSet&) const = default;

 private:
  int level_ = 0;
  std::vector<uint64_t> paths_;
};

// Thrown when an operation would exceed the resolution or materialization
// limits (level > maxLevel, or a refinement blowing past the entry cap).
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string path_to_string(const CubeTree& tree, const CubeId& id);
CubeId path_from_string(const CubeTree& tree, int level, const std::string& s);

}  // namespace limsup
