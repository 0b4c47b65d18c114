#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "limsup/netcontent.hpp"

using namespace limsup;

namespace {

CubeTree sym_tree(int max_level = 12) {
  return CubeTree::build(SpaceDescriptor::symbolic(2, 0.5), 0.5, max_level);
}

CubeSet random_set(const CubeTree& tree, int level, double density, RngStream& rng) {
  std::vector<uint64_t> paths;
  const uint64_t count = tree.cube_count(level);
  for (uint64_t p = 0; p < count; ++p)
    if (rng.next_unit() < density) paths.push_back(p);
  return CubeSet(level, std::move(paths));
}

}  // namespace

TEST_CASE("full cube costs mu(Q)^{t/s} exactly, every cube") {
  auto tree = sym_tree(8);
  const double s = tree.space().s();
  // F = everything at level 6
  std::vector<uint64_t> all(tree.cube_count(6));
  for (uint64_t p = 0; p < all.size(); ++p) all[p] = p;
  CubeSet F(6, all);
  for (double t : {0.2, 0.5, 0.9}) {
    for (int l = 0; l <= 5; ++l) {
      uint64_t probe = tree.cube_count(l) / 2;
      const auto res = net_content(tree, F, t, {l, probe});
      CHECK(res.value == doctest::Approx(std::pow(tree.cube_measure(l), t / s)).epsilon(1e-12));
      REQUIRE(res.cover.size() == 1);
      CHECK(res.cover[0] == CubeId{l, probe});
    }
  }
}

TEST_CASE("three-cylinder example: root cover beats the split") {
  auto tree = sym_tree(4);
  // F = {00, 01, 10} at level 2; t/s = 1/2
  CubeSet F(2, {0b00, 0b01, 0b10});
  const auto res = net_content(tree, F, 0.5);
  CHECK(res.value == doctest::Approx(1.0));
  REQUIRE(res.cover.size() == 1);
  CHECK(res.cover[0] == tree.root());
  // the alternative cover costs sqrt(1/2) + sqrt(1/4) = 1.207...
  CHECK(std::sqrt(0.5) + 0.5 > 1.0);
}

TEST_CASE("empty set has zero content") {
  auto tree = sym_tree(4);
  CHECK(net_content(tree, CubeSet(3, {}), 0.7).value == 0.0);
}

TEST_CASE("DP equals brute force on 200 random instances") {
  auto tree = sym_tree(6);
  RngStream rng(key_chain(101, TAG_INSTANCE));
  for (int rep = 0; rep < 200; ++rep) {
    const int level = 2 + static_cast<int>(rng.next_below(2));  // depth 2..3
    auto F = random_set(tree, level, 0.15 + 0.7 * rng.next_unit(), rng);
    const double t = 0.05 + 0.9 * rng.next_unit();
    const double dp = net_content(tree, F, t).value;
    const double bf = net_content_bruteforce(tree, F, t);
    CHECK(dp == doctest::Approx(bf).epsilon(1e-12));
  }
}

TEST_CASE("single leaf: cheapest ancestor wins") {
  auto tree = sym_tree(6);
  CubeSet F(3, {5});
  const double t = 0.4;
  const double s = tree.space().s();
  const auto res = net_content(tree, F, t);
  double best = 1e300;
  for (int l = 0; l <= 3; ++l) best = std::min(best, std::pow(tree.cube_measure(l), t / s));
  CHECK(res.value == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("t = s reduces to measure") {
  auto tree = sym_tree(6);
  RngStream rng(key_chain(103, TAG_INSTANCE));
  auto F = random_set(tree, 4, 0.4, rng);
  const double t = tree.space().s();
  // all covers tie at the measure when the exponent is 1
  const auto res = net_content(tree, F, t);
  CHECK(res.value == doctest::Approx(F.measure(tree)).epsilon(1e-12));
}

TEST_CASE("monotone in F, subadditive over unions, root bound, non-increasing in t") {
  auto tree = sym_tree(6);
  RngStream rng(key_chain(107, TAG_INSTANCE));
  for (int rep = 0; rep < 50; ++rep) {
    auto F = random_set(tree, 4, 0.3, rng);
    auto G = random_set(tree, 4, 0.3, rng);
    const double t = 0.1 + 0.8 * rng.next_unit();
    const auto u = F.set_union(G);
    const double vF = net_content(tree, F, t).value;
    const double vG = net_content(tree, G, t).value;
    const double vU = net_content(tree, u, t).value;
    CHECK(vF <= vU + 1e-12);
    CHECK(vU <= vF + vG + 1e-12);
    CHECK(vU <= 1.0 + 1e-12);  // root bound: mu(X)^{t/s} = 1
    const double v2 = net_content(tree, F, std::min(0.99, t + 0.1)).value;
    CHECK(v2 <= vF + 1e-12);
  }
}

TEST_CASE("brute force refuses oversized subtrees") {
  auto tree = sym_tree(8);
  RngStream rng(key_chain(109, TAG_INSTANCE));
  auto F = random_set(tree, 7, 0.5, rng);
  CHECK_THROWS_AS(net_content_bruteforce(tree, F, 0.5), EnumerationTooLarge);
}

TEST_CASE("li_certificate: full set has c = 1 everywhere") {
  auto tree = sym_tree(8);
  std::vector<uint64_t> all(tree.cube_count(8));
  for (uint64_t p = 0; p < all.size(); ++p) all[p] = p;
  CubeSet F(8, all);
  const auto cert = li_certificate(tree, F, 0.5, 4);
  CHECK(cert.min_c == doctest::Approx(1.0));
  CHECK(!cert.has_empty_cube);
}

TEST_CASE("li_certificate: a single cylinder collapses at distant cubes") {
  auto tree = sym_tree(8);
  CubeSet F = CubeSet(4, {3}).refine_to(tree, 8);
  const auto cert = li_certificate(tree, F, 0.9, 4);
  CHECK(cert.has_empty_cube);
  CHECK(cert.min_c == 0.0);
}

TEST_CASE("li_certificate histogram counts every cube once") {
  auto tree = sym_tree(8);
  RngStream rng(key_chain(113, TAG_INSTANCE));
  auto F = random_set(tree, 8, 0.6, rng);
  const int depth = 4;
  const auto cert = li_certificate(tree, F, 0.4, depth);
  uint64_t total = 0;
  for (uint64_t c : cert.histogram) total += c;
  uint64_t expect = 0;
  for (int l = 0; l <= depth; ++l) expect += tree.cube_count(l);
  CHECK(total == expect);
}
