#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "limsup/cubes.hpp"

using namespace limsup;

namespace {

CubeTree torus_quarter() { return CubeTree::build(SpaceDescriptor::torus(1), 0.25, 12); }
CubeTree torus_half() { return CubeTree::build(SpaceDescriptor::torus(1), 0.5, 14); }
CubeTree sym_tree() { return CubeTree::build(SpaceDescriptor::symbolic(2, 0.5), 0.5, 14); }
CubeTree cantor_tree() { return CubeTree::build(SpaceDescriptor::cantor3(), 1.0 / 3.0, 14); }
CubeTree prod_tree() {
  return CubeTree::build(SpaceDescriptor::product({SpaceDescriptor::torus(1),
                                                   SpaceDescriptor::torus(1)}),
                         0.5, 10);
}

std::vector<CubeTree> all_trees() {
  std::vector<CubeTree> out;
  out.push_back(torus_quarter());
  out.push_back(torus_half());
  out.push_back(sym_tree());
  out.push_back(cantor_tree());
  out.push_back(prod_tree());
  return out;
}

CubeId random_cube(const CubeTree& t, int level, RngStream& rng) {
  Point p = sample_point(t.space(), rng);
  return t.cube_containing(p, level);
}

}  // namespace

TEST_CASE("constants at b=1/4") {
  auto t = torus_quarter();
  CHECK(t.c1() == doctest::Approx(1.0 / 6.0));
  CHECK(t.c1prime() == doctest::Approx(4.0 / 3.0));
}

TEST_CASE("natural-cell constants recomputed exactly") {
  CHECK(torus_half().c1() == doctest::Approx(1.0 / 3.0));
  CHECK(torus_half().c1prime() == doctest::Approx(2.0 / 3.0));
  CHECK(sym_tree().c1() == 1.0);
  CHECK(sym_tree().c1prime() == 1.0);
}

TEST_CASE("level counts and measures") {
  CHECK(sym_tree().cube_count(10) == 1024);
  auto t = torus_quarter();
  CHECK(t.cube_count(3) == 64);
  CHECK(t.cube_measure(3) == doctest::Approx(std::pow(0.25, 3)));
}

TEST_CASE("invalid parameters") {
  CHECK_THROWS(CubeTree::build(SpaceDescriptor::torus(1), 0.3, 8));  // 1/b not integral
  CHECK_THROWS(CubeTree::build(SpaceDescriptor::symbolic(2, 0.5), 0.25, 8));
  CHECK_THROWS(CubeTree::build(SpaceDescriptor::torus(1), 0.5, 70));  // too deep to pack
}

TEST_CASE("cube_containing basics") {
  auto t = torus_half();
  CHECK(t.cube_containing(torus_point(std::vector<double>{0.77}), 0) == t.root());
  auto id = t.cube_containing(torus_point(std::vector<double>{0.3}), 2);
  CHECK(t.torus_indices(id)[0] == 1);  // cube [0.25, 0.5)
}

TEST_CASE("nesting property on random points") {
  for (const auto& t : all_trees()) {
    RngStream rng(key_chain(31, TAG_INSTANCE));
    const int top = std::min(t.max_level(), 10);
    for (int i = 0; i < 1000; ++i) {
      Point x = sample_point(t.space(), rng);
      for (int n = 0; n < top; ++n) {
        CHECK(t.parent(t.cube_containing(x, n + 1)) == t.cube_containing(x, n));
      }
    }
  }
}

TEST_CASE("partition: counts times measure is exactly one") {
  for (const auto& t : all_trees()) {
    for (int n = 0; n <= std::min(12, t.max_level()); ++n) {
      CHECK(static_cast<double>(t.cube_count(n)) * t.cube_measure(n) == 1.0);
    }
  }
}

TEST_CASE("sandwich: inner ball inside cube, cube inside outer ball") {
  for (const auto& t : all_trees()) {
    RngStream rng(key_chain(37, TAG_INSTANCE));
    const int top = std::min(t.max_level(), 10);
    for (int n = 0; n <= top; ++n) {
      for (int rep = 0; rep < 30; ++rep) {
        CubeId q = random_cube(t, n, rng);
        Point c = t.cube_center(q);
        CHECK(t.cube_containing(c, n) == q);  // center lies in its cube
        // points of the cube are within the outer radius of the center
        for (int k = 0; k < 10; ++k) {
          Point y = t.sample_in_cube(q, rng);
          CHECK(distance(t.space(), c, y) <= t.outer_radius(n) * (1.0 + 1e-12));
        }
        // points of the inner ball land in the cube
        for (int k = 0; k < 10; ++k) {
          Point y = t.sample_in_cube(q, rng);
          const double d = distance(t.space(), c, y);
          if (d < t.inner_radius(n)) CHECK(t.cube_containing(y, n) == q);
        }
      }
    }
  }
}

TEST_CASE("inner ball membership implies same cube (directed probes)") {
  // probe specifically points near the inner radius on the torus trees
  for (auto t : {torus_quarter(), torus_half()}) {
    RngStream rng(key_chain(41, TAG_INSTANCE));
    for (int n = 1; n <= std::min(8, t.max_level()); ++n) {
      for (int rep = 0; rep < 50; ++rep) {
        CubeId q = random_cube(t, n, rng);
        Point c = t.cube_center(q);
        const double eps = t.inner_radius(n) * (1.0 - 1e-9);
        for (double sign : {-1.0, 1.0}) {
          Point y = c;
          y.xs[0] += sign * eps * rng.next_unit();
          y.xs[0] -= std::floor(y.xs[0]);
          CHECK(t.cube_containing(y, n) == q);
        }
      }
    }
  }
}

TEST_CASE("centers nest across levels") {
  for (const auto& t : all_trees()) {
    RngStream rng(key_chain(43, TAG_INSTANCE));
    const int top = std::min(t.max_level() - 1, 9);
    for (int n = 0; n <= top; ++n) {
      for (int rep = 0; rep < 30; ++rep) {
        CubeId q = random_cube(t, n, rng);
        Point c = t.cube_center(q);
        CubeId childq = t.cube_containing(c, n + 1);
        CHECK(distance(t.space(), c, t.cube_center(childq)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("root center chain realizes property (4)") {
  for (const auto& t : all_trees()) {
    Point x0 = t.root_center();
    RngStream rng(key_chain(47, TAG_INSTANCE));
    for (int n = 0; n <= std::min(10, t.max_level()); ++n) {
      CubeId q = t.cube_containing(x0, n);
      CHECK(distance(t.space(), x0, t.cube_center(q)) <= 1e-9);
      // sampled points of B(x0, c1 b^n) stay in q
      for (int k = 0; k < 20; ++k) {
        Point y = t.sample_in_cube(q, rng);
        if (distance(t.space(), x0, y) < t.inner_radius(n))
          CHECK(t.cube_containing(y, n) == q);
      }
    }
  }
}

TEST_CASE("level counts within the regularity bracket") {
  for (const auto& t : all_trees()) {
    const double C = t.space().regularity_C();
    const double s = t.space().s();
    for (int n = 0; n <= std::min(12, t.max_level()); ++n) {
      const double count = static_cast<double>(t.cube_count(n));
      const double scale = std::pow(t.b(), -n * s);
      CHECK(count >= scale / (C * std::pow(t.c1prime(), s)) * (1.0 - 1e-9));
      CHECK(count <= scale * C / std::pow(t.c1(), s) * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("doubling covers stay below the Prop 2.3(2) budget") {
  for (const auto& t : all_trees()) {
    RngStream rng(key_chain(53, TAG_INSTANCE));
    const double s = t.space().s();
    const double C = t.space().regularity_C();
    const double budget = C * C * std::pow(4.0 * t.c1prime() / (t.b() * t.c1()), s);
    for (int rep = 0; rep < 1000; ++rep) {
      Point x = sample_point(t.space(), rng);
      const double r = std::exp(std::log(1e-3) * rng.next_unit()) * t.space().diameter() * 0.5;
      int n0 = 1;
      while (n0 < t.max_level() && t.outer_radius(n0) >= r) ++n0;
      if (t.outer_radius(n0) >= r) continue;  // too deep for this tree
      auto cover = t.cubes_meeting_closed_ball({x, 2.0 * r}, n0);
      CHECK(static_cast<double>(cover.size()) <= budget * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("cubeset algebra") {
  auto t = sym_tree();
  RngStream rng(key_chain(59, TAG_INSTANCE));
  std::vector<uint64_t> a, b;
  for (int i = 0; i < 40; ++i) {
    a.push_back(rng.next_below(t.cube_count(6)));
    b.push_back(rng.next_below(t.cube_count(6)));
  }
  CubeSet A(6, a), B(6, b);

  auto full = A.set_union(A.complement(t));
  CHECK(full.size() == t.cube_count(6));

  auto refined = A.refine_to(t, 9);
  CHECK(refined.measure(t) == doctest::Approx(A.measure(t)));

  auto inter = A.set_intersect(B);
  CHECK(inter.measure(t) <= std::min(A.measure(t), B.measure(t)) + 1e-15);

  CHECK_THROWS_AS(A.refine_to(t, 40), ResolutionError);
}

TEST_CASE("cubeset serialization round-trip") {
  auto t = torus_half();
  RngStream rng(key_chain(61, TAG_INSTANCE));
  std::vector<uint64_t> a;
  for (int i = 0; i < 25; ++i) a.push_back(rng.next_below(t.cube_count(8)));
  CubeSet A(8, a);
  std::stringstream ss;
  A.serialize(t, ss);
  auto back = CubeSet::deserialize(t, ss);
  CHECK(back == A);
  // stable bytes across serializations
  std::stringstream ss2;
  A.serialize(t, ss2);
  std::stringstream ss3;
  back.serialize(t, ss3);
  CHECK(ss2.str() == ss3.str());
}

TEST_CASE("ball_to_cubeset brackets an arc") {
  auto t = torus_half();
  Ball ball{torus_point(std::vector<double>{0.5}), 0.25};
  for (int N : {4, 6, 8, 10}) {
    auto inner = t.ball_to_cubeset(ball, N, CoverMode::Inner);
    auto outer = t.ball_to_cubeset(ball, N, CoverMode::Outer);
    const double mu = 0.5;
    CHECK(inner.measure(t) <= mu + 1e-12);
    CHECK(outer.measure(t) >= mu - 1e-12);
    // inner is a subset of outer
    CHECK(inner.set_intersect(outer).size() == inner.size());
    const double slack = 2.0 * (1.0 + 2.0 * t.c1prime()) * std::pow(t.b(), N);
    CHECK(outer.measure(t) - inner.measure(t) <= slack);
  }
}

TEST_CASE("ball_to_cubeset bracket tightens with level") {
  auto t = torus_half();
  Ball ball{torus_point(std::vector<double>{0.3}), 0.11};
  double prev_gap = 1e9;
  for (int N : {5, 7, 9, 11}) {
    auto inner = t.ball_to_cubeset(ball, N, CoverMode::Inner);
    auto outer = t.ball_to_cubeset(ball, N, CoverMode::Outer);
    const double gap = outer.measure(t) - inner.measure(t);
    CHECK(gap <= prev_gap + 1e-12);
    prev_gap = gap;
  }
}

TEST_CASE("ball_to_cubeset edge cases") {
  auto t = torus_half();
  CHECK(t.ball_to_cubeset({torus_point(std::vector<double>{0.2}), 0.0}, 5,
                          CoverMode::Outer).empty());
  auto all_in = t.ball_to_cubeset({torus_point(std::vector<double>{0.2}), 0.6}, 5,
                                  CoverMode::Inner);
  CHECK(all_in.size() == t.cube_count(5));
  auto all_out = t.ball_to_cubeset({torus_point(std::vector<double>{0.2}), 0.6}, 5,
                                   CoverMode::Outer);
  CHECK(all_out.size() == t.cube_count(5));
}

TEST_CASE("pair_sup_distance matches sampled suprema") {
  for (const auto& t : all_trees()) {
    RngStream rng(key_chain(67, TAG_INSTANCE));
    const int n = std::min(5, t.max_level());
    for (int rep = 0; rep < 40; ++rep) {
      CubeId a = random_cube(t, n, rng), b = random_cube(t, n, rng);
      const double sup = t.pair_sup_distance(a, b);
      double best = 0.0;
      for (int k = 0; k < 200; ++k) {
        Point pa = t.sample_in_cube(a, rng), pb = t.sample_in_cube(b, rng);
        best = std::max(best, distance(t.space(), pa, pb));
      }
      CHECK(best <= sup * (1.0 + 1e-9) + 1e-12);
      CHECK(best >= sup - 0.25 * std::pow(t.b(), n) - 1e-9);  // sampled max approaches sup
    }
  }
}
