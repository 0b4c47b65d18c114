#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "limsup/space.hpp"

using namespace limsup;

namespace {

const SpaceDescriptor kT1 = SpaceDescriptor::torus(1);
const SpaceDescriptor kT2 = SpaceDescriptor::torus(2);
const SpaceDescriptor kSym = SpaceDescriptor::symbolic(2, 0.5);
const SpaceDescriptor kCantor = SpaceDescriptor::cantor3();
const SpaceDescriptor kProd = SpaceDescriptor::product({kT1, kT1});

std::vector<SpaceDescriptor> all_spaces() { return {kT1, kT2, kSym, kCantor, kProd}; }

}  // namespace

TEST_CASE("distance examples") {
  CHECK(distance(kT1, torus_point(std::vector<double>{0.1}),
                 torus_point(std::vector<double>{0.9})) == doctest::Approx(0.2));

  auto x = digit_point_from_string(kSym, "0111");
  auto y = digit_point_from_string(kSym, "0100");
  CHECK(distance(kSym, x, y) == doctest::Approx(0.25));

  auto p = product_point({torus_point(std::vector<double>{0.0}),
                          torus_point(std::vector<double>{0.0})});
  auto q = product_point({torus_point(std::vector<double>{0.1}),
                          torus_point(std::vector<double>{0.3})});
  CHECK(distance(kProd, p, q) == doctest::Approx(0.3));
}

TEST_CASE("distance rejects mismatched points") {
  CHECK_THROWS(distance(kT1, torus_point(std::vector<double>{0.1, 0.2}),
                        torus_point(std::vector<double>{0.3})));
  CHECK_THROWS(distance(kSym, torus_point(std::vector<double>{0.1}),
                        digit_point_from_string(kSym, "01")));
}

TEST_CASE("metric axioms on random triples") {
  for (const auto& sp : all_spaces()) {
    RngStream rng(key_chain(7, TAG_INSTANCE));
    for (int i = 0; i < 1000; ++i) {
      Point a = sample_point(sp, rng), b = sample_point(sp, rng), c = sample_point(sp, rng);
      const double ab = distance(sp, a, b);
      const double ba = distance(sp, b, a);
      const double ac = distance(sp, a, c);
      const double cb = distance(sp, c, b);
      CHECK(ab == ba);
      CHECK(ab <= ac + cb + 1e-15);
      CHECK(distance(sp, a, a) == 0.0);
      CHECK(ab >= 0.0);
      CHECK(ab <= sp.diameter() + 1e-15);
    }
  }
}

TEST_CASE("measure_ball examples") {
  CHECK(measure_ball(kT1, {torus_point(std::vector<double>{0.3}), 0.2}) == doctest::Approx(0.4));

  // smallest k with (1/2)^k < 0.3 is k = 2, so the ball is a depth-2 cylinder
  auto x = digit_point_from_string(kSym, "0");
  CHECK(measure_ball(kSym, {x, 0.3}) == doctest::Approx(0.25));

  CHECK(measure_ball(kT1, {torus_point(std::vector<double>{0.0}), 0.0}) == 0.0);
  CHECK(measure_ball(kT1, {torus_point(std::vector<double>{0.0}), 2.0}) == doctest::Approx(1.0));
}

TEST_CASE("measure_ball cantor regularity at dyadic scales") {
  const double s = kCantor.s();
  const double C = kCantor.regularity_C();
  RngStream rng(key_chain(11, TAG_INSTANCE));
  for (int n = 1; n <= 20; ++n) {
    Point x = sample_point(kCantor, rng);
    const double r = std::pow(3.0, -n);
    const double mu = measure_ball(kCantor, {x, r});
    CHECK(mu >= std::pow(r, s) / C * (1.0 - 1e-12));
    CHECK(mu <= std::pow(r, s) * C * (1.0 + 1e-12));
  }
}

TEST_CASE("measure_ball monotone in radius and regular with declared C") {
  for (const auto& sp : all_spaces()) {
    RngStream rng(key_chain(13, TAG_INSTANCE));
    const double s = sp.s(), C = sp.regularity_C();
    for (int i = 0; i < 500; ++i) {
      Point x = sample_point(sp, rng);
      const double r1 = std::exp(std::log(1e-6) * rng.next_unit()) * sp.diameter();
      const double r2 = r1 * (1.0 + rng.next_unit());
      const double m1 = measure_ball(sp, {x, r1});
      const double m2 = measure_ball(sp, {x, std::min(r2, sp.diameter())});
      CHECK(m2 >= m1 - 1e-15);
      CHECK(m1 <= C * std::pow(r1, s) * (1.0 + 1e-12));
      CHECK(m1 >= std::pow(r1, s) / C * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("product ball measure equals product of factor measures") {
  RngStream rng(key_chain(17, TAG_INSTANCE));
  for (int i = 0; i < 200; ++i) {
    Point x = sample_point(kProd, rng);
    const double r = 0.5 * rng.next_unit() + 1e-4;
    const double lhs = measure_ball(kProd, {x, r});
    const double rhs = measure_ball(kT1, {x.parts[0], r}) * measure_ball(kT1, {x.parts[1], r});
    CHECK(lhs == doctest::Approx(rhs));
  }
}

TEST_CASE("regularity audits pass with declared constants") {
  for (const auto& sp : all_spaces()) {
    auto res = regularity_audit(sp, 10000, 42);
    INFO(sp.name(), " worst_upper=", res.worst_upper, " worst_lower=", res.worst_lower,
         " C=", res.declared_C);
    CHECK(res.pass);
  }
  // torus(1) and symbolic(2,1/2) have exact constant 2
  CHECK(regularity_audit(kT1, 10000, 1).worst_upper <= 2.0 + 1e-12);
  CHECK(regularity_audit(kSym, 10000, 1).worst_upper <= 2.0 + 1e-12);
}

TEST_CASE("audit boundary trial") {
  auto res = regularity_audit(kT1, 1, 9);
  CHECK(std::isfinite(res.worst_upper));
  CHECK(std::isfinite(res.worst_lower));
}

TEST_CASE("vitali_5r basics") {
  auto mk = [](double c, double r) { return Ball{torus_point(std::vector<double>{c}), r}; };
  auto single = vitali_5r(kT1, std::vector<Ball>{mk(0.0, 0.1)});
  CHECK(single.size() == 1);

  auto two = vitali_5r(kT1, std::vector<Ball>{mk(0.0, 0.1), mk(0.05, 0.1)});
  REQUIRE(two.size() == 1);
  CHECK(two[0].center.xs[0] == doctest::Approx(0.0));
  // the 5-dilate of the winner covers both inputs
  CHECK(2.0 * 0.1 + 0.05 <= 5.0 * 0.1);
}

TEST_CASE("vitali_5r random family: disjoint and 5-dilates cover") {
  RngStream rng(key_chain(23, TAG_INSTANCE));
  std::vector<Ball> balls;
  for (int i = 0; i < 50; ++i)
    balls.push_back({torus_point(std::vector<double>{rng.next_unit()}),
                     0.001 + 0.05 * rng.next_unit()});
  auto kept = vitali_5r(kT1, balls);
  for (size_t i = 0; i < kept.size(); ++i)
    for (size_t j = i + 1; j < kept.size(); ++j)
      CHECK(distance(kT1, kept[i].center, kept[j].center) >
            kept[i].radius + kept[j].radius);
  // grid check of the 5r cover over the union
  for (int g = 0; g < 10000; ++g) {
    const double t = g / 10000.0;
    Point p = torus_point(std::vector<double>{t});
    bool in_union = false;
    for (const auto& b : balls)
      if (distance(kT1, p, b.center) < b.radius) {
        in_union = true;
        break;
      }
    if (!in_union) continue;
    bool in_dilate = false;
    for (const auto& k : kept)
      if (distance(kT1, p, k.center) < 5.0 * k.radius) {
        in_dilate = true;
        break;
      }
    CHECK(in_dilate);
  }
}

TEST_CASE("cantor cdf fixed values") {
  CHECK(cantor_cdf(0.0) == 0.0);
  CHECK(cantor_cdf(1.0) == 1.0);
  CHECK(cantor_cdf(1.0 / 3.0) == doctest::Approx(0.5));
  CHECK(cantor_cdf(0.5) == doctest::Approx(0.5));
  CHECK(cantor_cdf(2.0 / 3.0) == doctest::Approx(0.5));
  CHECK(cantor_cdf(1.0 / 9.0) == doctest::Approx(0.25));
  CHECK(cantor_cdf(7.0 / 9.0) == doctest::Approx(0.75));
}

TEST_CASE("cantor endpoint walks") {
  CHECK(cantor_sup_below(0.5) == doctest::Approx(1.0 / 3.0));
  CHECK(cantor_inf_above(0.5) == doctest::Approx(2.0 / 3.0));
  CHECK(cantor_inf_above(0.0) == 0.0);
  CHECK(cantor_sup_below(1.0) == 1.0);
}
