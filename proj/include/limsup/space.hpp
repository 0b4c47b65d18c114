#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "limsup/rng.hpp"

namespace limsup {

// Model spaces. Each carries an exactly computable Ahlfors-regular measure:
//   torus(d)      [0,1)^d, coordinatewise circle metric combined by max,
//                 s = d, C = 2^d, diam 1/2, Lebesgue measure
//   symbolic(m,b) infinite digit strings over {0..m-1}, rho = b^(common
//                 prefix), s = log m / log(1/b), C = m, diam 1, Bernoulli
//   cantor3       middle-third Cantor set, Euclidean metric, natural measure,
//                 s = log2/log3, C = 3*2^s, diam 1
//   product       max metric over factors, s = sum s_i, C = prod C_i
enum class SpaceKind { Torus, Symbolic, Cantor3, Product };

struct SpaceDescriptor {
  SpaceKind kind = SpaceKind::Torus;
  int d = 1;                              // torus dimension
  int m = 2;                              // symbolic alphabet size
  double b = 0.5;                         // symbolic contraction ratio
  int depth = 64;                         // working digit depth (symbolic/cantor)
  std::vector<SpaceDescriptor> factors;   // product factors

  static SpaceDescriptor torus(int d);
  static SpaceDescriptor symbolic(int m, double b, int depth = 64);
  static SpaceDescriptor cantor3(int depth = 40);
  static SpaceDescriptor product(std::vector<SpaceDescriptor> fs);

  double s() const;             // regularity exponent
  double regularity_C() const;  // declared two-sided constant, >= 1
  double diameter() const;
  // Distances below this are not resolvable at working precision; Monte Carlo
  // pairs closer than the floor are resampled.
  double resolution_floor() const;

  bool validate(std::string* why = nullptr) const;
  std::string name() const;

  bool operator==(const SpaceDescriptor&) const = default;
};

// Space-specific coordinates; exactly one member is populated per kind
// (parts for products, digits for symbolic/cantor, xs for torus).
struct Point {
  std::vector<double> xs;
  std::vector<uint8_t> digits;
  std::vector<Point> parts;
};

struct Ball {
  Point center;
  double radius = 0.0;  // radius 0 denotes the empty set
};

double circle_dist(double a, double c);  // wraparound distance on [0,1)

double distance(const SpaceDescriptor& sp, const Point& x, const Point& y);
double measure_ball(const SpaceDescriptor& sp, const Ball& ball);
Point sample_point(const SpaceDescriptor& sp, RngStream& rng);

// Point builders (validated against the space).
Point torus_point(std::span<const double> xs);
Point digit_point(std::span<const uint8_t> digits);
Point product_point(std::vector<Point> parts);
// Parse "0110..." style addresses for symbolic/cantor points.
Point digit_point_from_string(const SpaceDescriptor& sp, const std::string& digits);

double cantor_value(std::span<const uint8_t> digits);  // address -> real in [0,1]
double cantor_cdf(double y);                           // devil's staircase

// Largest Cantor point <= y (or -1 if none) and smallest >= y (or 2 if none);
// used for exact diameters of Cantor balls.
double cantor_sup_below(double y);
double cantor_inf_above(double y);

struct AuditWitness {
  Ball ball;
  double ratio = 0.0;
};

struct AuditResult {
  double worst_upper = 0.0;  // max mu(B)/r^s
  double worst_lower = 0.0;  // max r^s/mu(B)
  AuditWitness upper_witness, lower_witness;
  double declared_C = 0.0;
  uint64_t trials = 0;
  bool pass = false;
};

// Samples (x, r) with x ~ mu and r log-uniform in [floor, diam]; both ratio
// maxima must stay below the declared C.
AuditResult regularity_audit(const SpaceDescriptor& sp, uint64_t trials, uint64_t seed);

// Greedy 5r-covering selection: radius descending, ties by input index; a ball
// is kept when its center is farther than the radius sum from every kept ball.
// The 5-dilates of the kept family cover the union of the inputs.
std::vector<Ball> vitali_5r(const SpaceDescriptor& sp, std::span<const Ball> balls);

}  // namespace limsup
