#include "limsup/randfractal.hpp"

#include <algorithm>
#include <cmath>

#include "limsup/rng.hpp"

namespace limsup {

SurvivalRule SurvivalRule::uniform(double g) {
  SurvivalRule r;
  r.kind = Kind::Uniform;
  r.gamma = g;
  return r;
}

SurvivalRule SurvivalRule::first_digit_split(double ga, double gb) {
  SurvivalRule r;
  r.kind = Kind::FirstDigitSplit;
  r.gamma = ga;
  r.gamma_b = gb;
  return r;
}

SurvivalRule SurvivalRule::constant(double p) {
  SurvivalRule r;
  r.kind = Kind::Constant;
  r.p = p;
  return r;
}

double SurvivalRule::probability(const CubeTree& tree, int n, uint64_t path) const {
  switch (kind) {
    case Kind::Uniform:
      return std::pow(tree.b(), n * gamma);
    case Kind::FirstDigitSplit: {
      const uint64_t first = (n == 0) ? 0 : path >> (tree.bits_per_level() * (n - 1));
      return std::pow(tree.b(), n * (first == 0 ? gamma : gamma_b));
    }
    case Kind::Constant:
      return p;
  }
  return 0.0;
}

std::pair<double, double> SurvivalRule::min_max_probability(const CubeTree& tree, int n) const {
  switch (kind) {
    case Kind::Uniform: {
      const double v = std::pow(tree.b(), n * gamma);
      return {v, v};
    }
    case Kind::FirstDigitSplit: {
      const double a = std::pow(tree.b(), n * gamma);
      const double b = std::pow(tree.b(), n * gamma_b);
      return {std::min(a, b), std::max(a, b)};
    }
    case Kind::Constant:
      return {p, p};
  }
  return {0.0, 0.0};
}

uint64_t block_size(const CubeTree& tree, const Dependence& dep, int n) {
  if (dep.kind == Dependence::Kind::Independent) return 1;
  return static_cast<uint64_t>(std::ceil(std::pow(tree.b(), -n * dep.delta_prime)));
}

CubeSet simulate_level(const RandomFractalModel& model, const CubeTree& tree, int n) {
  if (n > tree.max_level()) throw ResolutionError("level exceeds max_level");
  const uint64_t count = tree.cube_count(n);
  if (count > (uint64_t{1} << 26)) throw ResolutionError("level too wide to simulate");
  const uint64_t key = key_chain(key_chain(model.seed, TAG_COIN), static_cast<uint64_t>(n));
  const uint64_t bsz = block_size(tree, model.dependence, n);

  std::vector<uint64_t> out;
  uint64_t path = 0;
  for (uint64_t i = 0; i < count; ++i) {
    const double prob = model.survival.probability(tree, n, path);
    // blocks are consecutive runs in path order sharing one coin
    const uint64_t coin_key = (bsz == 1) ? path : (i / bsz);
    const double u = unit_at(key, coin_key);
    if (u < prob) out.push_back(path);
    path = tree.next_path(path, n);
  }
  return CubeSet(n, std::move(out));
}

IndexReport empirical_indices(const RandomFractalModel& model, const CubeTree& tree,
                              const std::vector<int>& n_range, double epsilon) {
  if (n_range.empty()) throw std::invalid_argument("empirical_indices needs levels");
  if (model.dependence.kind == Dependence::Kind::BlockCoupled &&
      model.survival.kind != SurvivalRule::Kind::Uniform &&
      model.survival.kind != SurvivalRule::Kind::Constant)
    throw std::invalid_argument(
        "analytic correlation count needs a uniform rule under block coupling");

  IndexReport rep;
  rep.epsilon = epsilon;
  const double log_inv_b = std::log(1.0 / tree.b());
  for (int n : n_range) {
    IndexLevelRow row;
    row.n = n;
    const auto [pmin, pmax] = model.survival.min_max_probability(tree, n);
    if (n > 0) {
      row.max_log = std::log(pmax) / log_inv_b / n;
      row.min_log = std::log(pmin) / log_inv_b / n;
    }
    // Cov(Z_Q, Z_Q') = P(1-P) for coupled pairs and 0 otherwise, so the
    // correlated-neighbour count is the block size whenever eps < (1-P)/P.
    if (model.dependence.kind == Dependence::Kind::BlockCoupled) {
      row.f_n = static_cast<double>(block_size(tree, model.dependence, n));
    } else {
      const double p = pmax;
      row.f_n = (epsilon < (1.0 - p) / std::max(p, 1e-300)) ? 1.0 : 0.0;
    }
    rep.per_level.push_back(row);
  }
  const auto& last = rep.per_level.back();
  rep.gamma1_hat = -last.max_log;
  rep.gamma2_hat = -last.min_log;
  if (model.dependence.kind == Dependence::Kind::BlockCoupled) {
    rep.delta_hat = model.dependence.delta_prime;
  } else {
    rep.delta_hat = 0.0;
  }
  return rep;
}

FractalExperimentResult fractal_dimension_experiment(const RandomFractalModel& model,
                                                     const CubeTree& tree,
                                                     const FractalExperimentConfig& cfg) {
  if (cfg.n_range.empty()) throw std::invalid_argument("experiment needs levels");
  const int top = *std::max_element(cfg.n_range.begin(), cfg.n_range.end());

  // dyadic windows [2^k, 2^{k+1}) over the simulated levels; keep the last K
  std::vector<std::vector<int>> windows;
  for (int k = 0;; ++k) {
    const int lo = 1 << k, hi = 1 << (k + 1);
    if (lo > top) break;
    std::vector<int> w;
    for (int n : cfg.n_range)
      if (n >= lo && n < hi) w.push_back(n);
    if (!w.empty()) windows.push_back(std::move(w));
  }
  if (static_cast<int>(windows.size()) > cfg.windows)
    windows.erase(windows.begin(), windows.end() - cfg.windows);

  FractalExperimentResult res;
  const IndexReport idx = empirical_indices(model, tree, cfg.n_range);
  const double s = tree.space().s();
  res.bound_lo = std::max(0.0, s - idx.gamma2_hat - idx.delta_hat);
  res.bound_hi = std::max(0.0, s - idx.gamma1_hat);

  CubeSet inter;
  bool first = true;
  for (size_t w = 0; w < windows.size(); ++w) {
    CubeSet uni(top, {});
    for (int n : windows[w]) {
      uni = uni.set_union(simulate_level(model, tree, n).refine_to(tree, top));
    }
    if (uni.empty()) {
      res.extinct = true;
      res.extinct_window = static_cast<int>(w);
      return res;
    }
    inter = first ? uni : inter.set_intersect(uni);
    first = false;
    if (inter.empty()) {
      res.extinct = true;
      res.extinct_window = static_cast<int>(w);
      return res;
    }
  }

  res.approximation = inter;
  res.report = box_dimension(tree, inter, cfg.count_levels);
  res.in_bounds = res.report.slope >= res.bound_lo - cfg.tol &&
                  res.report.slope <= res.bound_hi + cfg.tol;
  return res;
}

}  // namespace limsup
