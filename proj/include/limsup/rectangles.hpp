#pragma once

#include <cstdint>
#include <vector>

#include "limsup/covering.hpp"
#include "limsup/cubes.hpp"
#include "limsup/dimension.hpp"
#include "limsup/schedule.hpp"

namespace limsup {

// Anisotropic limsup rectangles: R_n = prod_i B_i(x_{n,i}, r_n^{a_i}) inside
// the full balls B_n = prod_i B_i(x_{n,i}, r_n), with 1 <= a_1 <= ... <= a_d.
struct RectangleSpec {
  std::vector<SpaceDescriptor> factors;
  std::vector<double> a;
  RadiusSchedule schedule;

  SpaceDescriptor product_space() const;  // the single factor itself when d = 1
  bool validate(std::string* why = nullptr) const;
};

struct RectExponent {
  double s = 0.0;
  int argmin = 0;
  std::vector<double> per_i;
};

// s = min_i [ sum_j s_j + a_i sum_{j<=i} s_j - sum_{j<=i} a_j s_j ] / a_i
RectExponent rectangle_exponent(const RectangleSpec& spec);

struct RectExperimentResult {
  RectExponent exponent;
  bool precondition_ok = false;   // limsup of the full balls must be full measure
  double full_ball_measure = 0.0; // window-intersection measure of the r_n balls
  DimReport report;
  bool dim_ok = false;
  CubeSet approximation;
};

RectExperimentResult rectangle_dimension_experiment(const CubeTree& tree,
                                                    const RectangleSpec& spec,
                                                    uint64_t n_max,
                                                    const std::vector<int>& levels,
                                                    int windows, uint64_t seed,
                                                    double tol = 0.2);

}  // namespace limsup
