#pragma once

#include <array>
#include <vector>

namespace niflab {

struct GLRule {
  std::vector<double> x, w;  // nodes/weights on [-1, 1]
};

// cached Gauss-Legendre rule of order n
const GLRule& gl_rule(int n);

struct QuadPoint {
  std::array<double, 3> x;
  double w;  // includes the r^2 dr dOmega jacobian
};

// product rule on the spherical shell r0 <= |x| <= r1: GL in radius, GL in
// cos(theta), uniform (trapezoid, exact for trig polynomials) in azimuth
std::vector<QuadPoint> spherical_grid(double r0, double r1, int nr, int nu, int naz);

}  // namespace niflab
