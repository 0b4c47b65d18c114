#include "limsup/rectangles.hpp"

#include <algorithm>
#include <cmath>

namespace limsup {

SpaceDescriptor RectangleSpec::product_space() const {
  if (factors.size() == 1) return factors[0];
  return SpaceDescriptor::product(factors);
}

bool RectangleSpec::validate(std::string* why) const {
  auto fail = [&](const char* m) {
    if (why) *why = m;
    return false;
  };
  if (factors.empty()) return fail("rectangle spec needs at least one factor");
  if (a.size() != factors.size()) return fail("one exponent per factor required");
  if (a.front() < 1.0 - 1e-12) return fail("exponents start at a_1 >= 1");
  for (size_t i = 1; i < a.size(); ++i)
    if (a[i] < a[i - 1] - 1e-12) return fail("exponents must be ascending");
  for (const auto& f : factors) {
    if (!f.validate(why)) return false;
  }
  std::string swhy;
  if (!schedule.validate(&swhy)) {
    if (why) *why = swhy;
    return false;
  }
  return true;
}

RectExponent rectangle_exponent(const RectangleSpec& spec) {
  std::string why;
  if (!spec.validate(&why)) throw std::invalid_argument("invalid rectangle spec: " + why);
  const size_t d = spec.factors.size();
  std::vector<double> s(d);
  double s_total = 0.0;
  for (size_t i = 0; i < d; ++i) {
    s[i] = spec.factors[i].s();
    s_total += s[i];
  }
  RectExponent res;
  res.s = 1e300;
  double prefix_s = 0.0, prefix_as = 0.0;
  for (size_t i = 0; i < d; ++i) {
    prefix_s += s[i];
    prefix_as += spec.a[i] * s[i];
    const double v = (s_total + spec.a[i] * prefix_s - prefix_as) / spec.a[i];
    res.per_i.push_back(v);
    if (v < res.s) {
      res.s = v;
      res.argmin = static_cast<int>(i);
    }
  }
  return res;
}

namespace {

struct FactorMark {
  CubeTree tree;
  std::vector<uint64_t> buf;
};

// combine one path per factor into the product path (per-level digit fields)
uint64_t combine_paths(const CubeTree& prod, const std::vector<CubeTree>& ftrees,
                       const std::vector<uint64_t>& fpaths, int level) {
  uint64_t out = 0;
  for (int l = 0; l < level; ++l) {
    uint64_t digit = 0;
    for (size_t f = 0; f < ftrees.size(); ++f) {
      const int fb = ftrees[f].bits_per_level();
      const uint64_t fdigit =
          (fpaths[f] >> (fb * (level - 1 - l))) & ((uint64_t{1} << fb) - 1);
      digit = (digit << fb) | fdigit;
    }
    out = (out << prod.bits_per_level()) | digit;
  }
  return out;
}

}  // namespace

RectExperimentResult rectangle_dimension_experiment(const CubeTree& tree,
                                                    const RectangleSpec& spec,
                                                    uint64_t n_max,
                                                    const std::vector<int>& levels,
                                                    int windows, uint64_t seed, double tol) {
  std::string why;
  if (!spec.validate(&why)) throw std::invalid_argument("invalid rectangle spec: " + why);
  if (!(spec.product_space() == tree.space()))
    throw std::invalid_argument("tree space does not match the rectangle spec");
  if (levels.size() < 3) throw InsufficientResolution("need at least 3 counting levels");

  RectExperimentResult res;
  res.exponent = rectangle_exponent(spec);

  const int L = *std::max_element(levels.begin(), levels.end());
  const size_t d = spec.factors.size();

  if (d == 1) {
    // single factor: the rectangle is a ball of radius r^{a_1}
    auto ball_sim = simulate_covering(tree, CenterProcess::iid(), spec.schedule, n_max, L,
                                      windows, seed);
    res.full_ball_measure = ball_sim.intersection.measure(tree);
    res.precondition_ok = res.full_ball_measure >= 0.99;
    if (spec.a[0] == 1.0) {
      res.approximation = ball_sim.intersection;
    } else {
      // same centers, shrunk radii
      const auto centers = draw_centers(tree.space(), CenterProcess::iid(), n_max, seed);
      const auto ranges = [&] {
        std::vector<std::pair<uint64_t, uint64_t>> out;
        uint64_t prev = 0;
        for (int k = 1; k <= windows; ++k) {
          uint64_t edge = static_cast<uint64_t>(std::llround(
              std::pow(static_cast<double>(n_max), k / static_cast<double>(windows))));
          edge = std::min(std::max(edge, prev + 1), n_max);
          out.push_back({prev + 1, edge});
          prev = edge;
        }
        out.back().second = n_max;
        return out;
      }();
      std::vector<uint8_t> inter(tree.cube_count(L), 1);
      std::vector<uint64_t> buf;
      for (const auto& [lo, hi] : ranges) {
        std::vector<uint8_t> bm(tree.cube_count(L), 0);
        for (uint64_t n = lo; n <= hi; ++n) {
          buf.clear();
          tree.ball_paths({centers[n - 1], std::pow(spec.schedule.r(n), spec.a[0])}, L,
                          CoverMode::Outer, buf);
          for (uint64_t p : buf) bm[p] = 1;
        }
        for (size_t i = 0; i < inter.size(); ++i) inter[i] &= bm[i];
      }
      std::vector<uint64_t> paths;
      for (uint64_t i = 0; i < inter.size(); ++i)
        if (inter[i]) paths.push_back(i);
      res.approximation = CubeSet(L, std::move(paths));
    }
  } else {
    std::vector<CubeTree> ftrees;
    for (const auto& f : spec.factors) ftrees.push_back(CubeTree::build(f, tree.b(), L));
    const auto centers = draw_centers(tree.space(), CenterProcess::iid(), n_max, seed);

    std::vector<std::pair<uint64_t, uint64_t>> ranges;
    {
      uint64_t prev = 0;
      for (int k = 1; k <= windows; ++k) {
        uint64_t edge = static_cast<uint64_t>(std::llround(
            std::pow(static_cast<double>(n_max), k / static_cast<double>(windows))));
        edge = std::min(std::max(edge, prev + 1), n_max);
        ranges.push_back({prev + 1, edge});
        prev = edge;
      }
      ranges.back().second = n_max;
    }

    const uint64_t cells = tree.cube_count(L);
    if (cells > (uint64_t{1} << 24)) throw ResolutionError("product level too wide");
    std::vector<uint8_t> inter_rect(cells, 1), inter_ball(cells, 1);
    std::vector<std::vector<uint64_t>> fbufs(d);
    std::vector<uint64_t> fpaths(d);

    for (const auto& [lo, hi] : ranges) {
      std::vector<uint8_t> bm_rect(cells, 0), bm_ball(cells, 0);
      for (uint64_t n = lo; n <= hi; ++n) {
        const double r = spec.schedule.r(n);
        // rectangle marks
        bool any_empty = false;
        for (size_t f = 0; f < d; ++f) {
          fbufs[f].clear();
          ftrees[f].ball_paths({centers[n - 1].parts[f], std::pow(r, spec.a[f])}, L,
                               CoverMode::Outer, fbufs[f]);
          if (fbufs[f].empty()) any_empty = true;
        }
        auto mark_product = [&](std::vector<uint8_t>& bm) {
          std::vector<size_t> odo(d, 0);
          for (;;) {
            for (size_t f = 0; f < d; ++f) fpaths[f] = fbufs[f][odo[f]];
            bm[combine_paths(tree, ftrees, fpaths, L)] = 1;
            size_t f = d - 1;
            for (;;) {
              if (++odo[f] < fbufs[f].size()) break;
              odo[f] = 0;
              if (f == 0) return;
              --f;
            }
          }
        };
        if (!any_empty) mark_product(bm_rect);
        // full-ball marks for the precondition
        bool ball_empty = false;
        for (size_t f = 0; f < d; ++f) {
          fbufs[f].clear();
          ftrees[f].ball_paths({centers[n - 1].parts[f], r}, L, CoverMode::Outer, fbufs[f]);
          if (fbufs[f].empty()) ball_empty = true;
        }
        if (!ball_empty) mark_product(bm_ball);
      }
      for (uint64_t i = 0; i < cells; ++i) {
        inter_rect[i] &= bm_rect[i];
        inter_ball[i] &= bm_ball[i];
      }
    }

    uint64_t ball_count = 0;
    std::vector<uint64_t> paths;
    for (uint64_t i = 0; i < cells; ++i) {
      ball_count += inter_ball[i];
      if (inter_rect[i]) paths.push_back(i);
    }
    res.full_ball_measure = static_cast<double>(ball_count) / static_cast<double>(cells);
    res.precondition_ok = res.full_ball_measure >= 0.99;
    res.approximation = CubeSet(L, std::move(paths));
  }

  if (res.approximation.empty()) {
    res.dim_ok = false;
    return res;
  }
  res.report = box_dimension(tree, res.approximation, levels);
  res.dim_ok = std::fabs(res.report.slope - res.exponent.s) <= tol;
  return res;
}

}  // namespace limsup
