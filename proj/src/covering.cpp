#include "limsup/covering.hpp"

#include <algorithm>
#include <cmath>

#include "limsup/rng.hpp"

namespace limsup {

S0Result s0(const RadiusSchedule& schedule) {
  std::string why;
  if (!schedule.validate(&why)) throw std::invalid_argument("bad schedule: " + why);
  S0Result res;
  switch (schedule.form) {
    case RadiusSchedule::Form::Power:
      res.s0 = 1.0 / schedule.alpha;
      res.note = "p-series: sum n^{-alpha t} converges iff alpha t > 1";
      return res;
    case RadiusSchedule::Form::Exponential:
      res.s0 = 0.0;
      res.note = "geometric series converges for every t > 0";
      return res;
    case RadiusSchedule::Form::LogPower:
      res.s0 = 1.0 / schedule.alpha;
      res.note = (schedule.beta * (1.0 / schedule.alpha) > 1.0)
                     ? "integral test: convergent at the critical exponent itself"
                     : "integral test: divergent at the critical exponent";
      return res;
    case RadiusSchedule::Form::Explicit: {
      res.exact = false;
      const size_t n = schedule.values.size();
      if (n < 64) {
        res.conclusive = false;
        res.note = "list too short to classify tail growth";
        return res;
      }
      // bracket by comparing dyadic block sums: convergent when blocks shrink
      auto block_ratio = [&](double t) {
        double prev = 0.0, cur = 0.0;
        size_t lo = n / 4, mid = n / 2;
        for (size_t i = lo; i < mid; ++i) prev += std::pow(schedule.values[i], t);
        for (size_t i = mid; i < n; ++i) cur += std::pow(schedule.values[i], t);
        return (prev > 0.0) ? cur / prev : 0.0;
      };
      double lo = 0.0, hi = 8.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (block_ratio(mid) >= 1.0) lo = mid;
        else hi = mid;
      }
      res.s0 = 0.5 * (lo + hi);
      res.note = "numeric bracketing of dyadic block sums; treat as approximate";
      return res;
    }
  }
  return res;
}

std::vector<Point> draw_centers(const SpaceDescriptor& sp, const CenterProcess& proc,
                                uint64_t n_max, uint64_t seed) {
  RngStream rng(key_chain(seed, TAG_CENTERS));
  std::vector<Point> out;
  out.reserve(n_max);
  if (proc.kind == CenterProcess::Kind::IidUniform) {
    for (uint64_t n = 0; n < n_max; ++n) out.push_back(sample_point(sp, rng));
    return out;
  }
  if (sp.kind != SpaceKind::Torus)
    throw std::invalid_argument("the mixing kernel is defined on torus spaces");
  if (!(proc.refresh_p > 0.0 && proc.refresh_p <= 1.0))
    throw std::invalid_argument("refresh probability must lie in (0, 1]");
  Point cur = sample_point(sp, rng);
  out.push_back(cur);
  for (uint64_t n = 1; n < n_max; ++n) {
    if (rng.next_unit() < proc.refresh_p) {
      cur = sample_point(sp, rng);
    } else {
      for (int d = 0; d < sp.d; ++d) {
        double v = cur.xs[d] + proc.rotation * (1.0 + 0.5 * d);
        cur.xs[d] = v - std::floor(v);
      }
    }
    out.push_back(cur);
  }
  return out;
}

namespace {

std::vector<std::pair<uint64_t, uint64_t>> geometric_windows(uint64_t n_max, int k_windows) {
  std::vector<std::pair<uint64_t, uint64_t>> out;
  uint64_t prev = 0;
  for (int k = 1; k <= k_windows; ++k) {
    uint64_t edge = static_cast<uint64_t>(
        std::llround(std::pow(static_cast<double>(n_max), k / static_cast<double>(k_windows))));
    edge = std::max(edge, prev + 1);
    edge = std::min(edge, n_max);
    out.push_back({prev + 1, edge});
    prev = edge;
  }
  out.back().second = n_max;
  return out;
}

struct LevelBitmap {
  std::vector<uint8_t> bits;
  explicit LevelBitmap(uint64_t n) : bits(n, 0) {}
  void mark(uint64_t p) { bits[p] = 1; }
  void and_with(const LevelBitmap& o) {
    for (size_t i = 0; i < bits.size(); ++i) bits[i] &= o.bits[i];
  }
  std::vector<uint64_t> collect() const {
    std::vector<uint64_t> out;
    for (size_t i = 0; i < bits.size(); ++i)
      if (bits[i]) out.push_back(i);
    return out;
  }
  uint64_t count() const {
    uint64_t acc = 0;
    for (uint8_t b : bits) acc += b;
    return acc;
  }
};

}  // namespace

CoveringSim simulate_covering(const CubeTree& tree, const CenterProcess& proc,
                              const RadiusSchedule& schedule, uint64_t n_max, int level,
                              int windows, uint64_t seed) {
  if (!tree.contiguous_paths())
    throw std::invalid_argument("covering simulation expects contiguous cube paths");
  if (level > tree.max_level()) throw ResolutionError("level exceeds max_level");
  const uint64_t cells = tree.cube_count(level);
  if (cells > (uint64_t{1} << 26)) throw ResolutionError("level too wide to simulate");

  const auto centers = draw_centers(tree.space(), proc, n_max, seed);
  const auto ranges = geometric_windows(n_max, windows);

  CoveringSim sim;
  sim.window_ranges = ranges;
  std::vector<uint64_t> buf;
  LevelBitmap inter(cells);
  std::fill(inter.bits.begin(), inter.bits.end(), 1);
  for (const auto& [lo, hi] : ranges) {
    LevelBitmap bm(cells);
    for (uint64_t n = lo; n <= hi; ++n) {
      buf.clear();
      tree.ball_paths({centers[n - 1], schedule.r(n)}, level, CoverMode::Outer, buf);
      for (uint64_t p : buf) bm.mark(p);
    }
    sim.windows.emplace_back(level, bm.collect());
    inter.and_with(bm);
  }
  sim.intersection = CubeSet(level, inter.collect());
  return sim;
}

std::vector<double> tail_union_measures(const CubeTree& tree, const CenterProcess& proc,
                                        const RadiusSchedule& schedule, uint64_t n_max,
                                        int level, const std::vector<uint64_t>& ms,
                                        uint64_t seed) {
  if (!tree.contiguous_paths())
    throw std::invalid_argument("covering simulation expects contiguous cube paths");
  const uint64_t cells = tree.cube_count(level);
  if (cells > (uint64_t{1} << 26)) throw ResolutionError("level too wide to simulate");
  const auto centers = draw_centers(tree.space(), proc, n_max, seed);

  std::vector<uint64_t> sorted_ms = ms;
  std::sort(sorted_ms.begin(), sorted_ms.end(), std::greater<>());
  std::vector<std::pair<uint64_t, double>> found;
  LevelBitmap bm(cells);
  std::vector<uint64_t> buf;
  uint64_t n = n_max;
  for (uint64_t m : sorted_ms) {
    for (; n >= m && n >= 1; --n) {
      buf.clear();
      tree.ball_paths({centers[n - 1], schedule.r(n)}, level, CoverMode::Outer, buf);
      for (uint64_t p : buf) bm.mark(p);
    }
    found.push_back({m, static_cast<double>(bm.count()) / static_cast<double>(cells)});
  }
  // report in the caller's order
  std::vector<double> out;
  for (uint64_t m : ms) {
    for (const auto& [mm, v] : found)
      if (mm == m) out.push_back(v);
  }
  return out;
}

CoveringExperimentResult covering_dimension_experiment(const CubeTree& tree,
                                                       const CenterProcess& proc,
                                                       const RadiusSchedule& schedule,
                                                       uint64_t n_max,
                                                       const std::vector<int>& levels,
                                                       int windows, uint64_t seed, double tol) {
  if (levels.size() < 3) throw InsufficientResolution("need at least 3 counting levels");
  CoveringExperimentResult res;
  res.s0 = s0(schedule);
  const double s = tree.space().s();
  res.expected_dim = std::min(s, res.s0.s0);

  const int top = *std::max_element(levels.begin(), levels.end());
  const auto sim = simulate_covering(tree, proc, schedule, n_max, top, windows, seed);
  res.approximation = sim.intersection;
  res.report = box_dimension(tree, sim.intersection, levels);
  res.dim_ok = std::fabs(res.report.slope - res.expected_dim) <= tol;

  // certificate trend: net-content ratio at t = 0.8 s0 across refinements
  const double t_cert = 0.8 * res.s0.s0;
  for (int refine : {8, 12}) {
    if (refine > tree.max_level()) continue;
    const auto simr = simulate_covering(tree, proc, schedule, n_max, refine, windows, seed);
    const auto cert = li_certificate(tree, simr.intersection, t_cert, std::min(6, refine));
    res.min_c_trend.push_back({refine, cert.min_c});
    if (refine == 8) res.certificate = cert;
  }
  return res;
}

}  // namespace limsup
