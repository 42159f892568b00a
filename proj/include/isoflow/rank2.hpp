#pragma once

#include "isoflow/rootsystem.hpp"
#include "isoflow/types.hpp"

#include <utility>
#include <vector>

namespace isoflow::rank2 {

// Closed-form euclidean sector flow from a unit start (r0 = 1, theta0 in the
// open sector (0, pi/g)).  In polar coordinates the radius obeys
// r(t)^2 = 1 - 2nt and the angle is recovered from the conserved/one-step
// invariant P2 = r^g cos(g theta):
//   g odd, or g in {3,6}:  cos(g theta(t)) = cos(g theta0) / (1-2nt)^{g/2}
//   g = 4:                 cos(4 theta(t)) =
//         (cos 4 theta0 - 8 (m2-m1)(t - n t^2)) / (1-2nt)^2
struct ClosedForm {
  int g = 0, m1 = 0, m2 = 0, n = 0;
  double theta0 = 0.0;
  double theta_min = 0.0;  // stationary angle of the angular dynamics
  double T = 0.0;          // collapse time of the unit start
  int limit_wall = 0;      // 0: theta -> 0 wall, 1: theta -> pi/g, -1: origin
};

// Throws UnsupportedFamilyError unless rs is I2 with g in {3,4,6} or odd g;
// theta0 must lie strictly inside (0, pi/g).
ClosedForm make_closed_form(const weyl::RootSystem& rs, double theta0);

double theta_at(const ClosedForm& cf, double t);   // defined on [0, T]
double radius_at(const ClosedForm& cf, double t);  // sqrt(1 - 2nt)
Vec point_at(const ClosedForm& cf, double t);

// Stationary angle: pi/(2g) for the uniform cases, arccos((m2-m1)/(m2+m1))/4
// for g = 4.
double minimal_angle(const weyl::RootSystem& rs);

// Spherical sector flow: cos(g theta) relaxes along K e^{g n t} + C with
// K = cos(g theta0) - C and C = cos(g theta_min) for g = 4 (C = 0 otherwise),
// so every non-stationary orbit leaves for a wall in finite time.
double spherical_theta_at(const ClosedForm& cf, double t);
double spherical_collapse_time(const ClosedForm& cf);  // +inf when stationary

struct SphericalOrbit {
  double theta0 = 0.0;
  int limit_wall = 0;  // -1 for the stationary orbit
  double T = 0.0;      // +inf for the stationary orbit
  std::vector<std::pair<double, double>> samples;  // (t, theta)
};

struct PhasePortrait {
  int g = 0, m1 = 0, m2 = 0, n = 0;
  double theta_min = 0.0;
  std::vector<SphericalOrbit> orbits;
};

// Representative spherical orbits: below, at, and above the stationary angle.
PhasePortrait spherical_phase_portrait(const weyl::RootSystem& rs,
                                       int orbit_count = 9);

}  // namespace isoflow::rank2
