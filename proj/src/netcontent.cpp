#include "limsup/netcontent.hpp"

#include <algorithm>
#include <cmath>

namespace limsup {

namespace {

// members of F under `within`, as a contiguous range of the sorted paths
std::pair<size_t, size_t> member_range(const CubeTree& tree, const CubeSet& F,
                                       const CubeId& within) {
  const int shift = tree.bits_per_level() * (F.level() - within.level);
  const auto& paths = F.paths();
  const uint64_t lo = within.path << shift;
  const uint64_t hi = (within.path + 1) << shift;
  const auto it_lo = std::lower_bound(paths.begin(), paths.end(), lo);
  const auto it_hi = std::lower_bound(paths.begin(), paths.end(), hi);
  return {static_cast<size_t>(it_lo - paths.begin()), static_cast<size_t>(it_hi - paths.begin())};
}

struct DpContext {
  const CubeTree& tree;
  const CubeSet& F;
  double exponent;  // t/s
  std::vector<double> cube_cost_at_level;  // mu(level)^{t/s}

  double cost(const CubeId& q, size_t lo, size_t hi) const {
    if (lo >= hi) return 0.0;
    const double own = cube_cost_at_level[q.level];
    if (q.level == F.level()) return own;
    const auto& paths = F.paths();
    const int shift = tree.bits_per_level() * (F.level() - q.level - 1);
    double child_sum = 0.0;
    size_t i = lo;
    while (i < hi) {
      const uint64_t cpath = paths[i] >> shift;
      size_t j = i + 1;
      while (j < hi && (paths[j] >> shift) == cpath) ++j;
      child_sum += cost({q.level + 1, cpath}, i, j);
      if (child_sum >= own) return own;  // cannot beat covering by q itself
      i = j;
    }
    return std::min(own, child_sum);
  }

  void rebuild_cover(const CubeId& q, size_t lo, size_t hi, std::vector<CubeId>& out) const {
    if (lo >= hi) return;
    const double own = cube_cost_at_level[q.level];
    if (q.level == F.level()) {
      out.push_back(q);
      return;
    }
    const auto& paths = F.paths();
    const int shift = tree.bits_per_level() * (F.level() - q.level - 1);
    double child_sum = 0.0;
    size_t i = lo;
    bool overflow = false;
    while (i < hi) {
      const uint64_t cpath = paths[i] >> shift;
      size_t j = i + 1;
      while (j < hi && (paths[j] >> shift) == cpath) ++j;
      child_sum += cost({q.level + 1, cpath}, i, j);
      if (child_sum >= own) {
        overflow = true;
        break;
      }
      i = j;
    }
    if (overflow) {  // coarse cover wins (ties prefer the coarse cube)
      out.push_back(q);
      return;
    }
    i = lo;
    while (i < hi) {
      const uint64_t cpath = paths[i] >> shift;
      size_t j = i + 1;
      while (j < hi && (paths[j] >> shift) == cpath) ++j;
      rebuild_cover({q.level + 1, cpath}, i, j, out);
      i = j;
    }
  }
};

DpContext make_context(const CubeTree& tree, const CubeSet& F, double t) {
  const double s = tree.space().s();
  DpContext ctx{tree, F, t / s, {}};
  ctx.cube_cost_at_level.resize(F.level() + 1);
  for (int l = 0; l <= F.level(); ++l)
    ctx.cube_cost_at_level[l] = std::pow(tree.cube_measure(l), t / s);
  return ctx;
}

}  // namespace

NetContentResult net_content(const CubeTree& tree, const CubeSet& F, double t,
                             const CubeId& within) {
  if (t < 0.0) throw std::invalid_argument("net content exponent must be >= 0");
  if (within.level > F.level())
    throw std::invalid_argument("within must be an ancestor-level cube of F");
  NetContentResult res;
  res.t = t;
  if (F.empty()) return res;
  auto ctx = make_context(tree, F, t);
  const auto [lo, hi] = member_range(tree, F, within);
  res.value = ctx.cost(within, lo, hi);
  ctx.rebuild_cover(within, lo, hi, res.cover);
  return res;
}

namespace {

constexpr size_t kEnumCap = 200000;

// all antichain cover costs of F within q, enumerated explicitly
void enumerate_covers(const CubeTree& tree, const CubeSet& F, const CubeId& q, size_t lo,
                      size_t hi, double exponent, std::vector<double>& out) {
  out.clear();
  if (lo >= hi) {
    out.push_back(0.0);
    return;
  }
  const double own = std::pow(tree.cube_measure(q.level), exponent);
  if (q.level == F.level()) {
    out.push_back(own);
    return;
  }
  const auto& paths = F.paths();
  const int shift = tree.bits_per_level() * (F.level() - q.level - 1);
  std::vector<double> combined = {0.0};
  size_t i = lo;
  while (i < hi) {
    const uint64_t cpath = paths[i] >> shift;
    size_t j = i + 1;
    while (j < hi && (paths[j] >> shift) == cpath) ++j;
    std::vector<double> child;
    enumerate_covers(tree, F, {q.level + 1, cpath}, i, j, exponent, child);
    if (combined.size() * child.size() > kEnumCap)
      throw EnumerationTooLarge("brute-force cover enumeration exceeds the cap");
    std::vector<double> next;
    next.reserve(combined.size() * child.size());
    for (double a : combined)
      for (double c : child) next.push_back(a + c);
    combined = std::move(next);
    i = j;
  }
  combined.push_back(own);
  out = std::move(combined);
}

}  // namespace

double net_content_bruteforce(const CubeTree& tree, const CubeSet& F, double t,
                              const CubeId& within) {
  if (F.level() - within.level > 4)
    throw EnumerationTooLarge("brute force limited to 4 levels below the root cube");
  if (F.empty()) return 0.0;
  const double s = tree.space().s();
  const auto [lo, hi] = member_range(tree, F, within);
  std::vector<double> costs;
  enumerate_covers(tree, F, within, lo, hi, t / s, costs);
  double best = 1e300;
  for (double c : costs) best = std::min(best, c);
  return best;
}

LiCertificate li_certificate(const CubeTree& tree, const CubeSet& F, double t, int max_depth) {
  if (max_depth > F.level())
    throw std::invalid_argument("li_certificate needs max_depth <= F resolution");
  LiCertificate cert;
  cert.t = t;
  cert.max_depth = max_depth;
  cert.histogram.assign(21, 0);
  cert.per_level_min.assign(max_depth + 1, 1.0);

  if (F.empty()) {
    cert.min_c = 0.0;
    cert.has_empty_cube = true;
    return cert;
  }

  auto ctx = make_context(tree, F, t);
  cert.min_c = 2.0;
  for (int l = 0; l <= max_depth; ++l) {
    const CubeSet anc = F.ancestors_at(tree, l);
    // cubes missing from the ancestor set have empty intersection: c = 0
    if (anc.size() < tree.cube_count(l)) {
      cert.has_empty_cube = true;
      cert.per_level_min[l] = 0.0;
      cert.min_c = 0.0;
      uint64_t probe = 0;
      for (uint64_t p : anc.paths()) {
        if (p != probe) break;
        probe = tree.next_path(probe, l);
      }
      cert.argmin = {l, probe};
      cert.histogram[0] += tree.cube_count(l) - anc.size();
    }
    const double denom = ctx.cube_cost_at_level[l];
    double level_min = 2.0;
    for (uint64_t p : anc.paths()) {
      const CubeId q{l, p};
      const auto [lo, hi] = member_range(tree, F, q);
      const double c = ctx.cost(q, lo, hi) / denom;
      if (c < level_min) level_min = c;
      if (c < cert.min_c) {
        cert.min_c = c;
        cert.argmin = q;
      }
      const int bin = std::min(20, 1 + static_cast<int>(c * 20.0));
      cert.histogram[bin]++;
    }
    cert.per_level_min[l] = std::min(cert.per_level_min[l], level_min);
  }
  if (cert.min_c > 1.0) cert.min_c = 1.0;  // F nonempty, all cubes covered
  return cert;
}

}  // namespace limsup
