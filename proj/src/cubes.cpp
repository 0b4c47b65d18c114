#include "limsup/cubes.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace limsup {

namespace {

constexpr size_t kMaterializeCap = size_t{1} << 26;

int bit_width_of(uint64_t v) { return v == 0 ? 1 : std::bit_width(v); }

int integer_inverse(double b) {
  const double inv = 1.0 / b;
  const long q = std::lround(inv);
  if (q < 2 || std::fabs(inv - static_cast<double>(q)) > 1e-9) return 0;
  return static_cast<int>(q);
}

// smallest k >= 0 with b^k < r (open-ball cylinder depth); r > 0
int cyl_depth_open(double b, double r) {
  if (r > 1.0) return 0;
  int k = std::max(0, static_cast<int>(std::floor(std::log(r) / std::log(b))) - 2);
  while (std::pow(b, k) >= r) ++k;
  while (k > 0 && std::pow(b, k - 1) < r) --k;
  return k;
}

// smallest k >= 0 with b^k <= R (closed-ball cylinder depth); R >= 0
int cyl_depth_closed(double b, double R) {
  if (R >= 1.0) return 0;
  if (R <= 0.0) return 1 << 20;  // effectively a point
  int k = std::max(0, static_cast<int>(std::floor(std::log(R) / std::log(b))) - 2);
  while (std::pow(b, k) > R) ++k;
  while (k > 0 && std::pow(b, k - 1) <= R) --k;
  return k;
}

int common_prefix(std::span<const uint8_t> a, std::span<const uint8_t> c, int limit) {
  const int n = std::min<int>(limit, static_cast<int>(std::min(a.size(), c.size())));
  for (int k = 0; k < n; ++k)
    if (a[k] != c[k]) return k;
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// construction

CubeTree CubeTree::build(const SpaceDescriptor& sp, double b, int max_level) {
  std::string why;
  if (!sp.validate(&why)) throw std::invalid_argument("invalid space: " + why);
  if (max_level < 0) throw std::invalid_argument("max_level must be >= 0");

  CubeTree t;
  t.space_ = sp;
  t.b_ = b;
  t.max_level_ = max_level;

  switch (sp.kind) {
    case SpaceKind::Torus: {
      const int q = integer_inverse(b);
      if (q < 2)
        throw std::invalid_argument(
            "torus cube tree needs 1/b to be an integer >= 2, got b=" + std::to_string(b));
      t.q_ = q;
      const int per_dim_bits = bit_width_of(static_cast<uint64_t>(q - 1));
      t.bits_ = per_dim_bits * sp.d;
      t.branching_ = 1;
      for (int i = 0; i < sp.d; ++i) t.branching_ *= static_cast<uint64_t>(q);
      if (q == 2) {
        t.beta_even_ = 1.0 / 3.0;
        t.beta_odd_ = 2.0 / 3.0;
        t.c1_ = 1.0 / 3.0;
        t.c1p_ = 2.0 / 3.0;
      } else if (q == 3) {
        t.beta_even_ = t.beta_odd_ = 0.5;
        t.c1_ = 0.5;
        t.c1p_ = 0.5;
      } else if (q % 2 == 0) {
        t.beta_even_ = t.beta_odd_ = (q / 2) / static_cast<double>(q - 1);
        t.c1_ = 0.5 - b / (1.0 - b);
        t.c1p_ = 1.0 / (1.0 - b);
      } else {
        t.beta_even_ = t.beta_odd_ = 0.5;
        t.c1_ = 0.5 - b / (1.0 - b);
        t.c1p_ = 1.0 / (1.0 - b);
      }
      break;
    }
    case SpaceKind::Symbolic: {
      if (std::fabs(b - sp.b) > 1e-12)
        throw std::invalid_argument("symbolic cube tree uses the natural cylinders: b must equal the space ratio");
      t.branching_ = static_cast<uint64_t>(sp.m);
      t.bits_ = bit_width_of(t.branching_ - 1);
      t.c1_ = 1.0;
      t.c1p_ = 1.0;
      if (max_level > sp.depth)
        throw ResolutionError("max_level exceeds the space working depth");
      break;
    }
    case SpaceKind::Cantor3: {
      if (std::fabs(b - 1.0 / 3.0) > 1e-12)
        throw std::invalid_argument("cantor3 cube tree uses the natural cells: b must be 1/3");
      t.b_ = 1.0 / 3.0;
      t.branching_ = 2;
      t.bits_ = 1;
      t.c1_ = 1.0;
      t.c1p_ = 1.0;
      if (max_level > sp.depth)
        throw ResolutionError("max_level exceeds the space working depth");
      break;
    }
    case SpaceKind::Product: {
      t.branching_ = 1;
      t.bits_ = 0;
      t.c1_ = 1e300;
      t.c1p_ = 0.0;
      for (const auto& f : sp.factors) {
        CubeTree ft = CubeTree::build(f, b, max_level);
        t.branching_ *= ft.branching_;
        t.bits_ += ft.bits_;
        t.c1_ = std::min(t.c1_, ft.c1_);
        t.c1p_ = std::max(t.c1p_, ft.c1p_);
        t.factor_bits_.push_back(ft.bits_);
        t.factors_.push_back(std::move(ft));
      }
      break;
    }
  }

  if (t.bits_ * std::max(1, max_level) > 62)
    throw ResolutionError("max_level too deep for packed cube paths");
  return t;
}

// ---------------------------------------------------------------------------
// counting and addressing

uint64_t CubeTree::cube_count(int level) const {
  uint64_t acc = 1;
  for (int i = 0; i < level; ++i) acc *= branching_;
  return acc;
}

double CubeTree::cube_measure(int level) const {
  // Level cells have equal measure in every model space.
  return 1.0 / static_cast<double>(cube_count(level));
}

double CubeTree::inner_radius(int level) const { return c1_ * std::pow(b_, level); }
double CubeTree::outer_radius(int level) const { return c1p_ * std::pow(b_, level); }

CubeId CubeTree::parent(const CubeId& q) const {
  if (q.level == 0) throw std::invalid_argument("root has no parent");
  return {q.level - 1, q.path >> bits_};
}

CubeId CubeTree::child(const CubeId& q, uint64_t digit) const {
  if (q.level >= max_level_) throw ResolutionError("child below max_level");
  return {q.level + 1, (q.path << bits_) | digit};
}

bool CubeTree::is_ancestor(const CubeId& anc, const CubeId& q) const {
  if (anc.level > q.level) return false;
  return (q.path >> (bits_ * (q.level - anc.level))) == anc.path;
}

std::vector<uint32_t> CubeTree::digits_of(const CubeId& q) const {
  std::vector<uint32_t> out(q.level);
  const uint64_t mask = (bits_ >= 64) ? ~uint64_t{0} : ((uint64_t{1} << bits_) - 1);
  for (int i = q.level - 1; i >= 0; --i) {
    out[i] = static_cast<uint32_t>((q.path >> (bits_ * (q.level - 1 - i))) & mask);
  }
  return out;
}

CubeId CubeTree::id_from_digits(int level, const std::vector<uint32_t>& digits) const {
  uint64_t p = 0;
  for (int i = 0; i < level; ++i) p = (p << bits_) | digits[i];
  return {level, p};
}

void CubeTree::split_digit(uint64_t digit, std::vector<uint64_t>& parts) const {
  parts.clear();
  if (space_.kind == SpaceKind::Torus) {
    const int pb = bits_ / space_.d;
    const uint64_t mask = (uint64_t{1} << pb) - 1;
    for (int i = space_.d - 1; i >= 0; --i) parts.push_back((digit >> (pb * i)) & mask);
  } else if (space_.kind == SpaceKind::Product) {
    int shift = bits_;
    for (size_t f = 0; f < factors_.size(); ++f) {
      shift -= factor_bits_[f];
      parts.push_back((digit >> shift) & ((uint64_t{1} << factor_bits_[f]) - 1));
    }
  } else {
    parts.push_back(digit);
  }
}

uint64_t CubeTree::join_digit(const std::vector<uint64_t>& parts) const {
  if (space_.kind == SpaceKind::Torus) {
    const int pb = bits_ / space_.d;
    uint64_t acc = 0;
    for (uint64_t p : parts) acc = (acc << pb) | p;
    return acc;
  }
  if (space_.kind == SpaceKind::Product) {
    uint64_t acc = 0;
    for (size_t f = 0; f < parts.size(); ++f) acc = (acc << factor_bits_[f]) | parts[f];
    return acc;
  }
  return parts[0];
}

uint64_t CubeTree::next_path(uint64_t path, int level) const {
  if (contiguous_paths()) return path + 1;
  // mixed-radix increment over per-level digits, least significant level first
  CubeId id{level, path};
  auto digits = digits_of(id);
  std::vector<uint64_t> parts;
  for (int i = level - 1; i >= 0; --i) {
    split_digit(digits[i], parts);
    // increment the atom odometer inside this level digit
    bool carried = true;
    if (space_.kind == SpaceKind::Torus) {
      for (int j = static_cast<int>(parts.size()) - 1; j >= 0 && carried; --j) {
        if (++parts[j] < static_cast<uint64_t>(q_)) carried = false;
        else parts[j] = 0;
      }
    } else if (space_.kind == SpaceKind::Product) {
      for (int j = static_cast<int>(parts.size()) - 1; j >= 0 && carried; --j) {
        if (++parts[j] < factors_[j].branching_) carried = false;
        else parts[j] = 0;
      }
    } else {
      if (++parts[0] < branching_) carried = false;
      else parts[0] = 0;
    }
    digits[i] = static_cast<uint32_t>(join_digit(parts));
    if (!carried) return id_from_digits(level, digits).path;
  }
  return cube_count(level);  // odometer wrapped: one past the last path
}

// ---------------------------------------------------------------------------
// geometry

CubeId CubeTree::cube_containing(const Point& x, int level) const {
  if (level > max_level_) throw ResolutionError("level exceeds max_level");
  switch (space_.kind) {
    case SpaceKind::Torus: {
      if (x.xs.size() != static_cast<size_t>(space_.d))
        throw std::invalid_argument("point/space mismatch");
      const int pb = bits_ / space_.d;
      std::vector<uint32_t> digits(level, 0);
      for (int dim = 0; dim < space_.d; ++dim) {
        double y = x.xs[dim] - std::floor(x.xs[dim]);
        for (int l = 0; l < level; ++l) {
          y *= q_;
          int dgt = static_cast<int>(y);
          if (dgt >= q_) dgt = q_ - 1;
          y -= dgt;
          digits[l] |= static_cast<uint32_t>(dgt) << (pb * (space_.d - 1 - dim));
        }
      }
      return id_from_digits(level, digits);
    }
    case SpaceKind::Symbolic:
    case SpaceKind::Cantor3: {
      if (static_cast<int>(x.digits.size()) < level)
        throw std::invalid_argument("point digits shallower than requested level");
      std::vector<uint32_t> digits(level);
      for (int l = 0; l < level; ++l) digits[l] = x.digits[l];
      return id_from_digits(level, digits);
    }
    case SpaceKind::Product: {
      if (x.parts.size() != factors_.size()) throw std::invalid_argument("point/space mismatch");
      std::vector<std::vector<uint32_t>> fd;
      fd.reserve(factors_.size());
      for (size_t f = 0; f < factors_.size(); ++f)
        fd.push_back(factors_[f].digits_of(factors_[f].cube_containing(x.parts[f], level)));
      std::vector<uint32_t> digits(level);
      std::vector<uint64_t> parts(factors_.size());
      for (int l = 0; l < level; ++l) {
        for (size_t f = 0; f < factors_.size(); ++f) parts[f] = fd[f][l];
        digits[l] = static_cast<uint32_t>(join_digit(parts));
      }
      return id_from_digits(level, digits);
    }
  }
  return {};
}

std::vector<uint64_t> CubeTree::torus_indices(const CubeId& q) const {
  if (space_.kind != SpaceKind::Torus) throw std::invalid_argument("torus_indices on non-torus");
  const int pb = bits_ / space_.d;
  const uint64_t mask = (uint64_t{1} << pb) - 1;
  std::vector<uint64_t> idx(space_.d, 0);
  auto digits = digits_of(q);
  for (int l = 0; l < q.level; ++l) {
    for (int dim = 0; dim < space_.d; ++dim) {
      idx[dim] = idx[dim] * q_ + ((digits[l] >> (pb * (space_.d - 1 - dim))) & mask);
    }
  }
  return idx;
}

CubeId CubeTree::torus_id_from_indices(int level, const std::vector<uint64_t>& idx) const {
  if (space_.kind != SpaceKind::Torus) throw std::invalid_argument("torus_indices on non-torus");
  const int pb = bits_ / space_.d;
  std::vector<uint32_t> digits(level, 0);
  std::vector<uint64_t> rem = idx;
  for (int l = level - 1; l >= 0; --l) {
    for (int dim = 0; dim < space_.d; ++dim) {
      const uint64_t dgt = rem[dim] % q_;
      rem[dim] /= q_;
      digits[l] |= static_cast<uint32_t>(dgt) << (pb * (space_.d - 1 - dim));
    }
  }
  return id_from_digits(level, digits);
}

Point CubeTree::cube_center(const CubeId& q) const {
  switch (space_.kind) {
    case SpaceKind::Torus: {
      const double w = std::pow(b_, q.level);
      auto idx = torus_indices(q);
      Point p;
      p.xs.resize(space_.d);
      for (int dim = 0; dim < space_.d; ++dim)
        p.xs[dim] = (static_cast<double>(idx[dim]) + beta(q.level)) * w;
      return p;
    }
    case SpaceKind::Symbolic:
    case SpaceKind::Cantor3: {
      Point p;
      p.digits.assign(space_.depth, 0);
      auto digits = digits_of(q);
      for (int l = 0; l < q.level; ++l) p.digits[l] = static_cast<uint8_t>(digits[l]);
      return p;
    }
    case SpaceKind::Product: {
      Point p;
      std::vector<uint64_t> parts(factors_.size());
      std::vector<std::vector<uint32_t>> fd(factors_.size(), std::vector<uint32_t>(q.level));
      auto digits = digits_of(q);
      for (int l = 0; l < q.level; ++l) {
        split_digit(digits[l], parts);
        for (size_t f = 0; f < factors_.size(); ++f) fd[f][l] = static_cast<uint32_t>(parts[f]);
      }
      for (size_t f = 0; f < factors_.size(); ++f)
        p.parts.push_back(factors_[f].cube_center(factors_[f].id_from_digits(q.level, fd[f])));
      return p;
    }
  }
  return {};
}

Point CubeTree::sample_in_cube(const CubeId& q, RngStream& rng) const {
  switch (space_.kind) {
    case SpaceKind::Torus: {
      const double w = std::pow(b_, q.level);
      auto idx = torus_indices(q);
      Point p;
      p.xs.resize(space_.d);
      for (int dim = 0; dim < space_.d; ++dim)
        p.xs[dim] = (static_cast<double>(idx[dim]) + rng.next_unit()) * w;
      return p;
    }
    case SpaceKind::Symbolic:
    case SpaceKind::Cantor3: {
      const int lim = (space_.kind == SpaceKind::Cantor3) ? 2 : space_.m;
      Point p;
      p.digits.resize(space_.depth);
      auto digits = digits_of(q);
      for (int l = 0; l < q.level; ++l) p.digits[l] = static_cast<uint8_t>(digits[l]);
      for (int l = q.level; l < space_.depth; ++l)
        p.digits[l] = static_cast<uint8_t>(rng.next_below(lim));
      return p;
    }
    case SpaceKind::Product: {
      Point p;
      std::vector<uint64_t> parts(factors_.size());
      std::vector<std::vector<uint32_t>> fd(factors_.size(), std::vector<uint32_t>(q.level));
      auto digits = digits_of(q);
      for (int l = 0; l < q.level; ++l) {
        split_digit(digits[l], parts);
        for (size_t f = 0; f < factors_.size(); ++f) fd[f][l] = static_cast<uint32_t>(parts[f]);
      }
      for (size_t f = 0; f < factors_.size(); ++f)
        p.parts.push_back(
            factors_[f].sample_in_cube(factors_[f].id_from_digits(q.level, fd[f]), rng));
      return p;
    }
  }
  return {};
}

namespace {

// closed/open query balls share these tests; R is the closed sandwich radius
struct BallQuery {
  const Point* center;
  double radius;
  bool closed;  // closed query ball (doubling checks) vs open (Def 1.1 balls)
};

bool arcs_meet(double c, double R, double x, double r, bool closed) {
  if (r + R >= 0.5) {
    if (r + R > 0.5) return true;
    // exactly half the circle on each side: open vs closed boundary decides
    return closed || circle_dist(c, x) < r + R;
  }
  const double dist = circle_dist(c, x);
  return closed ? dist <= r + R : dist < r + R;
}

bool arc_inside(double c, double R, double x, double r, bool closed) {
  if (closed ? (r >= 0.5) : (r > 0.5)) return true;
  const double dist = circle_dist(c, x);
  return closed ? dist + R <= r : dist + R < r;
}

}  // namespace

static bool sandwich_meets(const SpaceDescriptor& sp, const Point& c, double R,
                           const BallQuery& q);
static bool sandwich_inside(const SpaceDescriptor& sp, const Point& c, double R,
                            const BallQuery& q);

static bool sandwich_meets(const SpaceDescriptor& sp, const Point& c, double R,
                           const BallQuery& q) {
  if (q.radius <= 0.0 && !q.closed) return false;
  switch (sp.kind) {
    case SpaceKind::Torus: {
      for (int i = 0; i < sp.d; ++i)
        if (!arcs_meet(c.xs[i], R, q.center->xs[i], q.radius, q.closed)) return false;
      return true;
    }
    case SpaceKind::Symbolic: {
      const int k0 = q.closed ? cyl_depth_closed(sp.b, q.radius) : cyl_depth_open(sp.b, q.radius);
      const int kbar = cyl_depth_closed(sp.b, R);
      const int need = std::min(k0, kbar);
      return common_prefix(c.digits, q.center->digits, need) >= need;
    }
    case SpaceKind::Cantor3: {
      const double cv = cantor_value(c.digits);
      const double xv = cantor_value(q.center->digits);
      const double gap = std::fabs(cv - xv);
      return q.closed ? gap <= q.radius + R : gap < q.radius + R;
    }
    case SpaceKind::Product: {
      for (size_t f = 0; f < sp.factors.size(); ++f) {
        BallQuery fq{&q.center->parts[f], q.radius, q.closed};
        if (!sandwich_meets(sp.factors[f], c.parts[f], R, fq)) return false;
      }
      return true;
    }
  }
  return false;
}

static bool sandwich_inside(const SpaceDescriptor& sp, const Point& c, double R,
                            const BallQuery& q) {
  if (q.radius <= 0.0) return false;
  switch (sp.kind) {
    case SpaceKind::Torus: {
      for (int i = 0; i < sp.d; ++i)
        if (!arc_inside(c.xs[i], R, q.center->xs[i], q.radius, q.closed)) return false;
      return true;
    }
    case SpaceKind::Symbolic: {
      const int k0 = q.closed ? cyl_depth_closed(sp.b, q.radius) : cyl_depth_open(sp.b, q.radius);
      const int kbar = cyl_depth_closed(sp.b, R);
      if (kbar < k0) return false;
      return common_prefix(c.digits, q.center->digits, k0) >= k0;
    }
    case SpaceKind::Cantor3: {
      const double cv = cantor_value(c.digits);
      const double xv = cantor_value(q.center->digits);
      const double gap = std::fabs(cv - xv);
      return q.closed ? gap + R <= q.radius : gap + R < q.radius;
    }
    case SpaceKind::Product: {
      for (size_t f = 0; f < sp.factors.size(); ++f) {
        BallQuery fq{&q.center->parts[f], q.radius, q.closed};
        if (!sandwich_inside(sp.factors[f], c.parts[f], R, fq)) return false;
      }
      return true;
    }
  }
  return false;
}

bool CubeTree::outer_ball_meets(const CubeId& q, const Ball& ball) const {
  BallQuery bq{&ball.center, ball.radius, false};
  return sandwich_meets(space_, cube_center(q), outer_radius(q.level), bq);
}

bool CubeTree::outer_ball_inside(const CubeId& q, const Ball& ball) const {
  BallQuery bq{&ball.center, ball.radius, false};
  return sandwich_inside(space_, cube_center(q), outer_radius(q.level), bq);
}

struct TreeWalker {
  const CubeTree& tree;
  const BallQuery query;
  const int target_level;
  const CoverMode mode;
  std::vector<uint64_t> out;

  void append_descendants(const CubeId& id) {
    const int delta = target_level - id.level;
    if (tree.contiguous_paths()) {
      const uint64_t lo = id.path << (tree.bits_ * delta);
      const uint64_t n = tree.cube_count(delta);
      if (out.size() + n > kMaterializeCap)
        throw ResolutionError("cubeset materialization exceeds cap");
      for (uint64_t i = 0; i < n; ++i) out.push_back(lo + i);
      return;
    }
    if (delta == 0) {
      if (out.size() + 1 > kMaterializeCap)
        throw ResolutionError("cubeset materialization exceeds cap");
      out.push_back(id.path);
      return;
    }
    for (uint64_t d = 0; d < tree.branching_; ++d)
      append_descendants(tree.child(id, valid_digit(d)));
  }

  uint64_t valid_digit(uint64_t i) const {
    // enumerate the i-th valid level digit (atom odometer)
    const auto& sp = tree.space_;
    if (sp.kind == SpaceKind::Torus) {
      std::vector<uint64_t> parts(sp.d);
      uint64_t rem = i;
      for (int dim = sp.d - 1; dim >= 0; --dim) {
        parts[dim] = rem % tree.q_;
        rem /= tree.q_;
      }
      return tree.join_digit(parts);
    }
    if (sp.kind == SpaceKind::Product) {
      std::vector<uint64_t> parts(tree.factors_.size());
      uint64_t rem = i;
      for (int f = static_cast<int>(tree.factors_.size()) - 1; f >= 0; --f) {
        parts[f] = rem % tree.factors_[f].branching_;
        rem /= tree.factors_[f].branching_;
      }
      return tree.join_digit(parts);
    }
    return i;
  }

  void walk(const CubeId& id) {
    if (id.level == target_level) {
      const bool take = (mode == CoverMode::Outer)
                            ? sandwich_meets(tree.space_, tree.cube_center(id),
                                             tree.outer_radius(id.level), query)
                            : sandwich_inside(tree.space_, tree.cube_center(id),
                                              tree.outer_radius(id.level), query);
      if (take) {
        if (out.size() + 1 > kMaterializeCap)
          throw ResolutionError("cubeset materialization exceeds cap");
        out.push_back(id.path);
      }
      return;
    }
    // every descendant's outer ball sits inside this inflated sandwich ball
    const double r_bound = tree.outer_radius(id.level) * (1.0 + tree.b_);
    const Point c = tree.cube_center(id);
    if (!sandwich_meets(tree.space_, c, r_bound, query)) return;
    if (sandwich_inside(tree.space_, c, r_bound, query)) {
      append_descendants(id);
      return;
    }
    for (uint64_t d = 0; d < tree.branching_; ++d) walk(tree.child(id, valid_digit(d)));
  }
};

CubeSet CubeTree::ball_to_cubeset(const Ball& ball, int level, CoverMode mode) const {
  if (level > max_level_) throw ResolutionError("level exceeds max_level");
  if (ball.radius <= 0.0) return CubeSet(level, {});
  TreeWalker w{*this, BallQuery{&ball.center, ball.radius, false}, level, mode, {}};
  w.walk(root());
  return CubeSet(level, std::move(w.out));
}

void CubeTree::ball_paths(const Ball& ball, int level, CoverMode mode,
                          std::vector<uint64_t>& out) const {
  if (level > max_level_) throw ResolutionError("level exceeds max_level");
  if (ball.radius <= 0.0) return;
  TreeWalker w{*this, BallQuery{&ball.center, ball.radius, false}, level, mode, std::move(out)};
  w.walk(root());
  out = std::move(w.out);
}

std::vector<CubeId> CubeTree::cubes_meeting_closed_ball(const Ball& ball, int level) const {
  if (level > max_level_) throw ResolutionError("level exceeds max_level");
  TreeWalker w{*this, BallQuery{&ball.center, ball.radius, true}, level, CoverMode::Outer, {}};
  w.walk(root());
  std::vector<CubeId> ids;
  ids.reserve(w.out.size());
  std::sort(w.out.begin(), w.out.end());
  for (uint64_t p : w.out) ids.push_back({level, p});
  return ids;
}

namespace {

// sup over x in [p, p+w], y in [q, q+w] of circle distance
double interval_sup_circle(double p, double q, double w) {
  const double lo = p - q - w, hi = p - q + w;
  // [lo, hi] contains a point congruent to 1/2 mod 1 iff some integer k
  // satisfies lo - 1/2 <= k <= hi - 1/2
  if (hi - lo >= 1.0 || std::floor(hi - 0.5) >= lo - 0.5 - 1e-15) return 0.5;
  auto g = [](double t) {
    t -= std::floor(t);
    return std::min(t, 1.0 - t);
  };
  return std::max(g(lo), g(hi));
}

}  // namespace

double CubeTree::pair_sup_distance(const CubeId& a, const CubeId& c) const {
  if (a.level != c.level) throw std::invalid_argument("pair_sup_distance needs equal levels");
  switch (space_.kind) {
    case SpaceKind::Torus: {
      const double w = std::pow(b_, a.level);
      auto ia = torus_indices(a), ic = torus_indices(c);
      double acc = 0.0;
      for (int dim = 0; dim < space_.d; ++dim)
        acc = std::max(acc, interval_sup_circle(ia[dim] * w, ic[dim] * w, w));
      return acc;
    }
    case SpaceKind::Symbolic: {
      if (a.path == c.path) return std::pow(b_, a.level);
      int k = 0;
      while (k < a.level &&
             (a.path >> (bits_ * (a.level - 1 - k))) == (c.path >> (bits_ * (a.level - 1 - k))))
        ++k;
      return std::pow(b_, k);
    }
    case SpaceKind::Cantor3: {
      const double w = std::pow(3.0, -a.level);
      Point pa = cube_center(a), pc = cube_center(c);
      const double av = cantor_value(pa.digits), cv = cantor_value(pc.digits);
      return std::max(std::fabs(av + w - cv), std::fabs(cv + w - av));
    }
    case SpaceKind::Product: {
      auto da = digits_of(a), dc = digits_of(c);
      std::vector<uint64_t> pa, pc;
      double acc = 0.0;
      std::vector<std::vector<uint32_t>> fa(factors_.size(), std::vector<uint32_t>(a.level)),
          fc(factors_.size(), std::vector<uint32_t>(a.level));
      for (int l = 0; l < a.level; ++l) {
        split_digit(da[l], pa);
        split_digit(dc[l], pc);
        for (size_t f = 0; f < factors_.size(); ++f) {
          fa[f][l] = static_cast<uint32_t>(pa[f]);
          fc[f][l] = static_cast<uint32_t>(pc[f]);
        }
      }
      for (size_t f = 0; f < factors_.size(); ++f) {
        acc = std::max(acc, factors_[f].pair_sup_distance(
                                factors_[f].id_from_digits(a.level, fa[f]),
                                factors_[f].id_from_digits(a.level, fc[f])));
      }
      return acc;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// CubeSet

CubeSet::CubeSet(int level, std::vector<uint64_t> paths) : level_(level), paths_(std::move(paths)) {
  std::sort(paths_.begin(), paths_.end());
  paths_.erase(std::unique(paths_.begin(), paths_.end()), paths_.end());
}

bool CubeSet::contains(uint64_t path) const {
  return std::binary_search(paths_.begin(), paths_.end(), path);
}

double CubeSet::measure(const CubeTree& tree) const {
  return static_cast<double>(paths_.size()) / static_cast<double>(tree.cube_count(level_));
}

CubeSet CubeSet::set_union(const CubeSet& other) const {
  if (level_ != other.level_) throw std::invalid_argument("cubeset ops need a common level");
  std::vector<uint64_t> out;
  out.reserve(paths_.size() + other.paths_.size());
  std::set_union(paths_.begin(), paths_.end(), other.paths_.begin(), other.paths_.end(),
                 std::back_inserter(out));
  CubeSet r;
  r.level_ = level_;
  r.paths_ = std::move(out);
  return r;
}

CubeSet CubeSet::set_intersect(const CubeSet& other) const {
  if (level_ != other.level_) throw std::invalid_argument("cubeset ops need a common level");
  std::vector<uint64_t> out;
  std::set_intersection(paths_.begin(), paths_.end(), other.paths_.begin(), other.paths_.end(),
                        std::back_inserter(out));
  CubeSet r;
  r.level_ = level_;
  r.paths_ = std::move(out);
  return r;
}

CubeSet CubeSet::complement(const CubeTree& tree) const {
  const uint64_t total = tree.cube_count(level_);
  if (total - paths_.size() > kMaterializeCap)
    throw ResolutionError("complement exceeds materialization cap");
  std::vector<uint64_t> out;
  out.reserve(total - paths_.size());
  size_t i = 0;
  uint64_t p = 0;
  for (uint64_t k = 0; k < total; ++k) {
    if (i < paths_.size() && paths_[i] == p) {
      ++i;
    } else {
      out.push_back(p);
    }
    p = tree.next_path(p, level_);
  }
  CubeSet r;
  r.level_ = level_;
  r.paths_ = std::move(out);
  return r;
}

CubeSet CubeSet::refine_to(const CubeTree& tree, int level) const {
  if (level < level_) throw std::invalid_argument("refine_to goes to a finer level");
  if (level > tree.max_level()) throw ResolutionError("refinement exceeds max_level");
  if (level == level_) return *this;
  const int delta = level - level_;
  const uint64_t per = tree.cube_count(delta);
  if (paths_.size() * per > kMaterializeCap)
    throw ResolutionError("refinement exceeds materialization cap");
  std::vector<uint64_t> out;
  out.reserve(paths_.size() * per);
  if (tree.contiguous_paths()) {
    const int shift = tree.bits_per_level() * delta;
    for (uint64_t p : paths_) {
      const uint64_t lo = p << shift;
      for (uint64_t k = 0; k < per; ++k) out.push_back(lo + k);
    }
  } else {
    for (uint64_t p : paths_) {
      uint64_t sub = 0;
      for (uint64_t k = 0; k < per; ++k) {
        out.push_back((p << (tree.bits_per_level() * delta)) | sub);
        sub = tree.next_path(sub, delta);
      }
    }
  }
  CubeSet r;
  r.level_ = level;
  r.paths_ = std::move(out);
  return r;
}

CubeSet CubeSet::ancestors_at(const CubeTree& tree, int level) const {
  if (level > level_) throw std::invalid_argument("ancestors_at goes to a coarser level");
  const int shift = tree.bits_per_level() * (level_ - level);
  std::vector<uint64_t> out;
  out.reserve(paths_.size());
  uint64_t last = ~uint64_t{0};
  for (uint64_t p : paths_) {
    const uint64_t a = p >> shift;
    if (out.empty() || a != last) {
      out.push_back(a);
      last = a;
    }
  }
  CubeSet r;
  r.level_ = level;
  r.paths_ = std::move(out);
  return r;
}

std::vector<CubeId> CubeSet::ids() const {
  std::vector<CubeId> out;
  out.reserve(paths_.size());
  for (uint64_t p : paths_) out.push_back({level_, p});
  return out;
}

// ---------------------------------------------------------------------------
// text format

std::string path_to_string(const CubeTree& tree, const CubeId& id) {
  if (id.level == 0) return "-";
  static const char* kAlpha = "0123456789abcdefghijklmnopqrstuvwxyz";
  auto digits = tree.digits_of(id);
  std::string out;
  if (tree.branching() <= 36) {
    for (uint32_t d : digits) out += kAlpha[d];
  } else {
    for (size_t i = 0; i < digits.size(); ++i) {
      if (i) out += '.';
      out += std::to_string(digits[i]);
    }
  }
  return out;
}

CubeId path_from_string(const CubeTree& tree, int level, const std::string& s) {
  if (s == "-") return {};
  std::vector<uint32_t> digits;
  if (tree.branching() <= 36) {
    for (char c : s) {
      uint32_t v;
      if (c >= '0' && c <= '9') v = c - '0';
      else if (c >= 'a' && c <= 'z') v = 10 + (c - 'a');
      else throw std::invalid_argument("bad path digit");
      digits.push_back(v);
    }
  } else {
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, '.')) digits.push_back(static_cast<uint32_t>(std::stoul(tok)));
  }
  if (static_cast<int>(digits.size()) != level)
    throw std::invalid_argument("path length does not match level");
  return tree.id_from_digits(level, digits);
}

void CubeSet::serialize(const CubeTree& tree, std::ostream& os) const {
  os << "limsup-cubeset v1\n";
  os << "space " << tree.space().name() << "\n";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", tree.b());
  os << "b " << buf << "\n";
  os << "level " << level_ << "\n";
  os << "count " << paths_.size() << "\n";
  for (uint64_t p : paths_) os << path_to_string(tree, {level_, p}) << "\n";
}

CubeSet CubeSet::deserialize(const CubeTree& tree, std::istream& is) {
  std::string line;
  std::getline(is, line);
  if (line != "limsup-cubeset v1") throw std::invalid_argument("bad cubeset header");
  std::string key, val;
  is >> key >> val;  // space <name>
  if (key != "space" || val != tree.space().name())
    throw std::invalid_argument("cubeset space does not match tree");
  double bval;
  is >> key >> bval;
  if (key != "b" || std::fabs(bval - tree.b()) > 1e-12)
    throw std::invalid_argument("cubeset ratio does not match tree");
  int level;
  is >> key >> level;
  if (key != "level") throw std::invalid_argument("bad cubeset header: level");
  size_t count;
  is >> key >> count;
  if (key != "count") throw std::invalid_argument("bad cubeset header: count");
  std::vector<uint64_t> paths;
  paths.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    std::string tok;
    is >> tok;
    paths.push_back(path_from_string(tree, level, tok).path);
  }
  return CubeSet(level, std::move(paths));
}

}  // namespace limsup
