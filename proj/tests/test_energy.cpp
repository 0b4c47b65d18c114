#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "limsup/energy.hpp"

using namespace limsup;

namespace {

const SpaceDescriptor kT1 = SpaceDescriptor::torus(1);
const SpaceDescriptor kT2 = SpaceDescriptor::torus(2);
const SpaceDescriptor kSym = SpaceDescriptor::symbolic(2, 0.5);
const SpaceDescriptor kCantor = SpaceDescriptor::cantor3();
const SpaceDescriptor kProd = SpaceDescriptor::product({kT1, kT1});

// independent quadrature oracle for circle-arc energies: I = int_0^L w^{-t}
// 2(L - w) dw. The substitution w = v^{1/(1-t)} absorbs the singularity, so
// plain Simpson converges fast on the transformed integrand.
double arc_energy_quadrature(double L, double t) {
  const double p = 1.0 / (1.0 - t);
  const double vmax = std::pow(L, 1.0 / p);
  auto g = [&](double v) {
    const double w = std::pow(v, p);
    return p * 2.0 * (L - w);
  };
  const int n = 20000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v0 = vmax * i / n, v1 = vmax * (i + 1) / n;
    acc += (v1 - v0) / 6.0 * (g(v0) + 4.0 * g(0.5 * (v0 + v1)) + g(v1));
  }
  return acc;
}

}  // namespace

TEST_CASE("circle whole-space closed form 2^t/(1-t)") {
  for (double t : {0.25, 0.5, 0.75}) {
    const auto est = energy(kT1, Domain::whole(), t);
    CHECK(est.method == EnergyMethod::ClosedForm);
    CHECK(est.value == doctest::Approx(std::pow(2.0, t) / (1.0 - t)).epsilon(1e-12));
  }
  CHECK(energy(kT1, Domain::whole(), 0.5).value == doctest::Approx(2.0 * std::sqrt(2.0)));
}

TEST_CASE("t = 0 gives mu(U)^2") {
  const auto est = energy(kT1, Domain::of_ball({torus_point(std::vector<double>{0.3}), 0.1}), 0.0);
  CHECK(est.value == doctest::Approx(0.04));
  CHECK(est.stderr_ == 0.0);
}

TEST_CASE("t >= s raises divergent-energy error") {
  CHECK_THROWS_AS(energy(kT1, Domain::whole(), 1.0), DivergentEnergyError);
  CHECK_THROWS_AS(energy(kSym, Domain::whole(), 1.2), DivergentEnergyError);
}

TEST_CASE("arc closed form matches quadrature oracle") {
  for (double rho : {0.05, 0.125, 0.2}) {
    for (double t : {0.3, 0.6}) {
      const auto est = energy(kT1, Domain::of_ball({torus_point(std::vector<double>{0.4}), rho}), t);
      CHECK(est.method == EnergyMethod::ClosedForm);
      CHECK(est.value == doctest::Approx(arc_energy_quadrature(2.0 * rho, t)).epsilon(1e-4));
      // closed form for the arc: 2 L^{2-t} / ((1-t)(2-t))
      const double L = 2.0 * rho;
      CHECK(est.value ==
            doctest::Approx(2.0 * std::pow(L, 2.0 - t) / ((1.0 - t) * (2.0 - t))).epsilon(1e-12));
    }
  }
}

TEST_CASE("torus(2) whole-space closed form d 2^t/(d-t)") {
  for (double t : {0.5, 1.0, 1.5}) {
    const auto est = energy(kT2, Domain::whole(), t);
    CHECK(est.value == doctest::Approx(2.0 * std::pow(2.0, t) / (2.0 - t)).epsilon(1e-12));
  }
}

TEST_CASE("symbolic whole-space recursion and MC agree") {
  const double t = 0.5;
  const auto exact = energy(kSym, Domain::whole(), t);
  CHECK(exact.method == EnergyMethod::Recursion);
  const double expected = 0.5 / (1.0 - std::pow(2.0, 0.5) / 2.0);
  CHECK(exact.value == doctest::Approx(expected).epsilon(1e-12));
  const auto mc = energy_with_method(kSym, Domain::whole(), t, EnergyMethod::MonteCarlo,
                                     1u << 20, 7);
  CHECK(std::fabs(mc.value - exact.value) <= 3.0 * mc.stderr_);
}

TEST_CASE("symbolic cylinder and cube-set recursion vs MC") {
  auto tree = CubeTree::build(kSym, 0.5, 14);
  RngStream rng(key_chain(3, TAG_INSTANCE));
  std::vector<uint64_t> paths;
  for (int i = 0; i < 17; ++i) paths.push_back(rng.next_below(tree.cube_count(6)));
  CubeSet set(6, paths);
  const double t = 0.4;  // 2t < s keeps the plain pair estimator's variance finite
  const auto exact = energy(kSym, Domain::of_cubes(tree, set), t);
  CHECK(exact.method == EnergyMethod::Recursion);
  const auto mc = energy_with_method(kSym, Domain::of_cubes(tree, set), t,
                                     EnergyMethod::MonteCarlo, 1u << 21, 11);
  CHECK(std::fabs(mc.value - exact.value) <= 4.0 * mc.stderr_);

  // single cylinder: mu^2 b^{-jt} I_t(X)
  const auto ball = energy(kSym, Domain::of_ball({digit_point_from_string(kSym, "0101"), 0.3}), t);
  const double ix = 0.5 / (1.0 - std::pow(2.0, t) / 2.0);
  CHECK(ball.value == doctest::Approx(0.0625 * std::pow(0.5, -2.0 * t) * ix).epsilon(1e-12));
}

TEST_CASE("torus closed form vs MC on balls and whole space") {
  for (double t : {0.25, 0.75}) {
    const auto cf = energy(kT1, Domain::whole(), t);
    const auto mc = energy_with_method(kT1, Domain::whole(), t, EnergyMethod::MonteCarlo,
                                       1u << 20, 5);
    CHECK(std::fabs(mc.value - cf.value) <= 3.0 * mc.stderr_);
  }
  const Domain ball = Domain::of_ball({torus_point(std::vector<double>{0.7}), 0.2});
  const auto cf = energy(kT1, ball, 0.5);
  const auto mc = energy_with_method(kT1, ball, 0.5, EnergyMethod::MonteCarlo, 1u << 20, 6);
  CHECK(std::fabs(mc.value - cf.value) <= 3.0 * mc.stderr_);
}

TEST_CASE("product rectangle closed form vs MC") {
  const Domain rect = Domain::of_rect(
      product_point({torus_point(std::vector<double>{0.3}), torus_point(std::vector<double>{0.6})}),
      {0.2, 0.05});
  for (double t : {0.5, 1.3}) {
    const auto cf = energy(kProd, rect, t);
    CHECK(cf.method == EnergyMethod::ClosedForm);
    const auto mc = energy_with_method(kProd, rect, t, EnergyMethod::MonteCarlo, 1u << 21, 9);
    CHECK(std::fabs(mc.value - cf.value) <= 4.0 * mc.stderr_);
  }
}

TEST_CASE("wrapping arc (L > 1/2) closed form vs MC") {
  const Domain ball = Domain::of_ball({torus_point(std::vector<double>{0.1}), 0.35});
  const auto cf = energy(kT1, ball, 0.4);
  const auto mc = energy_with_method(kT1, ball, 0.4, EnergyMethod::MonteCarlo, 1u << 21, 13);
  CHECK(std::fabs(mc.value - cf.value) <= 4.0 * mc.stderr_);
}

TEST_CASE("monotone in t for fixed domain") {
  const Domain ball = Domain::of_ball({torus_point(std::vector<double>{0.2}), 0.15});
  double prev = 0.0;
  for (double t : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    const double v = energy(kT1, ball, t).value;
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
}

TEST_CASE("MC coverage: 100 seeded circle runs within 3 stderr") {
  int hits = 0;
  const double t = 0.5;
  const double truth = std::pow(2.0, t) / (1.0 - t);
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    const auto mc = energy_with_method(kT1, Domain::whole(), t, EnergyMethod::MonteCarlo,
                                       1u << 20, seed);
    if (std::fabs(mc.value - truth) <= 3.0 * mc.stderr_) ++hits;
  }
  CHECK(hits >= 99);
}

TEST_CASE("cantor MC energy respects Lemma 3.1 bracket") {
  RngStream rng(key_chain(19, TAG_INSTANCE));
  Point c = sample_point(kCantor, rng);
  const Domain ball = Domain::of_ball({c, 0.2});
  const auto bc = energy_bounds_check(kCantor, ball, 0.3, 1u << 17, 3);
  CHECK(bc.pass);
  CHECK(!bc.lower_violated);
}

TEST_CASE("Lemma 3.1 whole-circle numbers") {
  const auto bc = energy_bounds_check(kT1, Domain::whole(), 0.5);
  CHECK(bc.diam == doctest::Approx(0.5));
  CHECK(bc.lower == doctest::Approx(std::sqrt(2.0)));
  CHECK(bc.value == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(bc.pass);
}

TEST_CASE("Lemma 3.1 on 100 random instances across spaces") {
  RngStream rng(key_chain(23, TAG_INSTANCE));
  std::vector<SpaceDescriptor> spaces = {kT1, kT2, kSym, kCantor, kProd};
  auto sym_tree = CubeTree::build(kSym, 0.5, 12);
  auto t1_tree = CubeTree::build(kT1, 0.5, 12);
  int checked = 0;
  for (int i = 0; checked < 100; ++i) {
    const auto& sp = spaces[i % spaces.size()];
    const double s = sp.s();
    const double t = 0.9 * s * rng.next_unit();
    Domain dom;
    const int pick = static_cast<int>(rng.next_below(3));
    if (pick == 0) {
      dom = Domain::whole();
    } else if (pick == 1) {
      Point c = sample_point(sp, rng);
      dom = Domain::of_ball({c, 0.02 + 0.3 * rng.next_unit()});
    } else {
      const CubeTree* tree = nullptr;
      if (sp == kSym) tree = &sym_tree;
      if (sp == kT1) tree = &t1_tree;
      if (!tree) continue;  // cube domains exercised on the two single trees
      std::vector<uint64_t> paths;
      const int k = 1 + static_cast<int>(rng.next_below(30));
      for (int j = 0; j < k; ++j) paths.push_back(rng.next_below(tree->cube_count(7)));
      dom = Domain::of_cubes(*tree, CubeSet(7, paths));
    }
    const auto bc = energy_bounds_check(sp, dom, t, 1u << 16, 1000 + i);
    INFO("space=", sp.name(), " t=", t, " kind=", static_cast<int>(dom.kind));
    CHECK(bc.pass);
    CHECK(!bc.lower_violated);
    ++checked;
  }
}

TEST_CASE("lambda recovery on inflated-ball pairs") {
  std::vector<double> grid;
  for (double t = 0.05; t < 0.999; t += 0.05) grid.push_back(t);
  std::vector<uint64_t> ns;
  for (uint64_t n = 32; n <= 65536; n *= 4) ns.push_back(n);
  for (double t0 : {0.25, 0.5, 0.75}) {
    LambdaQuery q;
    q.space = kT1;
    q.schedule = RadiusSchedule::power(1.0);
    q.rule = LambdaQuery::Rule::BallPower;
    q.t0 = t0;
    q.ns = ns;
    q.t_grid = grid;
    const auto res = lambda_index(q);
    CHECK(!res.ambiguous);
    INFO("t0=", t0, " lambda=", res.lambda_hat);
    CHECK(std::fabs(res.lambda_hat - t0) <= 0.05 + 1e-9);
  }
}

TEST_CASE("lambda of the unshrunk sequence is s") {
  std::vector<double> grid;
  for (double t = 0.05; t < 0.999; t += 0.05) grid.push_back(t);
  LambdaQuery q;
  q.space = kT1;
  q.schedule = RadiusSchedule::power(1.0);
  q.rule = LambdaQuery::Rule::BallPower;
  q.t0 = 1.0;  // E_n = B_n
  q.ns = {32, 128, 512, 2048, 8192};
  q.t_grid = grid;
  const auto res = lambda_index(q);
  CHECK(!res.ambiguous);
  CHECK(res.lambda_hat == doctest::Approx(0.95));  // top of the grid: lambda = s
}

TEST_CASE("lambda for the (1,2)-rectangle is 3/2") {
  std::vector<double> grid;
  for (double t = 0.05; t < 1.999; t += 0.05) grid.push_back(t);
  LambdaQuery q;
  q.space = kProd;
  q.schedule = RadiusSchedule::power(0.5);
  q.rule = LambdaQuery::Rule::Rectangle;
  q.rect_a = {1.0, 2.0};
  q.ns = {64, 256, 1024, 4096, 16384};
  q.t_grid = grid;
  const auto res = lambda_index(q);
  CHECK(!res.ambiguous);
  INFO("lambda=", res.lambda_hat);
  CHECK(std::fabs(res.lambda_hat - 1.5) <= 0.05 + 1e-9);
}

TEST_CASE("lambda shrink rule keeps lambda = s") {
  std::vector<double> grid;
  for (double t = 0.05; t < 0.999; t += 0.05) grid.push_back(t);
  LambdaQuery q;
  q.space = kT1;
  q.schedule = RadiusSchedule::power(1.0);
  q.rule = LambdaQuery::Rule::Shrink;
  q.shrink_c = 0.25;
  q.ns = {32, 128, 512, 2048, 8192};
  q.t_grid = grid;
  const auto res = lambda_index(q);
  CHECK(!res.ambiguous);
  CHECK(res.lambda_hat == doctest::Approx(0.95));
}

TEST_CASE("lambda rejects bad inputs") {
  LambdaQuery q;
  q.space = kProd;
  q.schedule = RadiusSchedule::power(1.0);
  q.rule = LambdaQuery::Rule::Rectangle;
  q.rect_a = {2.0, 1.0};  // not ascending
  q.ns = {4, 16};
  q.t_grid = {0.5};
  CHECK_THROWS_AS(lambda_index(q), std::invalid_argument);
  q.rect_a = {1.0, 2.0};
  q.t_grid = {2.5};  // beyond s
  CHECK_THROWS_AS(lambda_index(q), std::invalid_argument);
}

TEST_CASE("resolution floor resampling is accounted") {
  // shallow working depth: pairs inside a deep cylinder collide below b^depth
  const auto sym = SpaceDescriptor::symbolic(2, 0.5, 12);
  Point c;
  c.digits.assign(12, 0);
  const Domain ball = Domain::of_ball({c, std::pow(0.5, 10)});
  const auto mc = energy_with_method(sym, ball, 0.3, EnergyMethod::MonteCarlo, 1u << 12, 2);
  CHECK(mc.samples == (1u << 12));
  CHECK(mc.resampled > 0);
}
