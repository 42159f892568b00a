#include "isoflow/rank2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace isoflow::rank2 {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_supported(const weyl::RootSystem& rs) {
  if (rs.family() != weyl::Family::I2)
    throw ConfigError("closed forms are only defined for the dihedral family");
  const auto& sp = rs.spec();
  const int g = sp.g;
  const bool ok = (g % 2 == 1) || g == 4 || (g == 6 && sp.m1 == sp.m2) ||
                  (g == 3);
  if (!ok)
    throw UnsupportedFamilyError(
        "no closed form for even g outside {4, 6 with equal multiplicities}");
}

// cos(g theta_min); 0 except for g = 4 where the two wall classes compete.
double stationary_cos(int g, int m1, int m2) {
  if (g == 4) return double(m2 - m1) / double(m2 + m1);
  return 0.0;
}

// A start produced from the computed stationary angle lands within rounding
// error of the separatrix; snap it there so it is classified as stationary
// instead of drifting on a ~1e-16 residue.
constexpr double kStationaryTol = 1e-13;

}  // namespace

ClosedForm make_closed_form(const weyl::RootSystem& rs, double theta0) {
  require_supported(rs);
  const auto& sp = rs.spec();
  ClosedForm cf;
  cf.g = sp.g;
  cf.m1 = sp.m1;
  cf.m2 = (sp.g % 2 == 1) ? sp.m1 : sp.m2;
  cf.n = rs.n();
  cf.theta0 = theta0;
  const double wall = kPi / cf.g;
  if (!(theta0 > 0.0 && theta0 < wall))
    throw OutsideChamberError("start angle must lie strictly inside (0, pi/g)");

  const double c = stationary_cos(cf.g, cf.m1, cf.m2);
  cf.theta_min = std::acos(std::clamp(c, -1.0, 1.0)) / cf.g;

  const double c0 = std::cos(cf.g * theta0);
  if (cf.g == 4) {
    // (1-2nT)^2 = s where the angular invariant first reaches a wall value.
    double s;
    if (c0 > c + kStationaryTol) {  // heads to theta = 0
      s = (c0 - c) / (1.0 - c);
      cf.limit_wall = 0;
    } else if (c0 < c - kStationaryTol) {  // heads to theta = pi/4
      s = (c - c0) / (1.0 + c);
      cf.limit_wall = 1;
    } else {
      s = 0.0;
      cf.limit_wall = -1;
    }
    cf.T = (1.0 - std::sqrt(s)) / (2.0 * cf.n);
  } else {
    const double a = std::abs(c0);
    if (c0 > kStationaryTol)
      cf.limit_wall = 0;
    else if (c0 < -kStationaryTol)
      cf.limit_wall = 1;
    else
      cf.limit_wall = -1;
    cf.T = (1.0 - std::pow(a <= kStationaryTol ? 0.0 : a, 2.0 / cf.g)) /
           (2.0 * cf.n);
  }
  return cf;
}

double radius_at(const ClosedForm& cf, double t) {
  const double r2 = 1.0 - 2.0 * cf.n * t;
  return std::sqrt(std::max(r2, 0.0));
}

double theta_at(const ClosedForm& cf, double t) {
  const double r2 = 1.0 - 2.0 * cf.n * t;
  if (r2 <= 0.0)  // at or past the origin; report the stationary angle
    return cf.theta_min;
  const double c0 = std::cos(cf.g * cf.theta0);
  double val;
  if (cf.g == 4) {
    val = (c0 - 8.0 * (cf.m2 - cf.m1) * (t - cf.n * t * t)) / (r2 * r2);
  } else {
    val = c0 / std::pow(r2, cf.g / 2.0);
  }
  return std::acos(std::clamp(val, -1.0, 1.0)) / cf.g;
}

Vec point_at(const ClosedForm& cf, double t) {
  const double r = radius_at(cf, t);
  const double th = theta_at(cf, t);
  Vec x(2);
  x << r * std::cos(th), r * std::sin(th);
  return x;
}

double minimal_angle(const weyl::RootSystem& rs) {
  require_supported(rs);
  const auto& sp = rs.spec();
  const int m2 = (sp.g % 2 == 1) ? sp.m1 : sp.m2;
  const double c = stationary_cos(sp.g, sp.m1, m2);
  return std::acos(std::clamp(c, -1.0, 1.0)) / sp.g;
}

namespace {
double spherical_drift(const ClosedForm& cf, double c) {
  const double K = std::cos(cf.g * cf.theta0) - c;
  return (std::abs(K) <= kStationaryTol) ? 0.0 : K;
}
}  // namespace

double spherical_theta_at(const ClosedForm& cf, double t) {
  const double c = stationary_cos(cf.g, cf.m1, cf.m2);
  const double K = spherical_drift(cf, c);
  const double val = K * std::exp(cf.g * cf.n * t) + c;
  return std::acos(std::clamp(val, -1.0, 1.0)) / cf.g;
}

double spherical_collapse_time(const ClosedForm& cf) {
  const double c = stationary_cos(cf.g, cf.m1, cf.m2);
  const double K = spherical_drift(cf, c);
  if (K == 0.0) return std::numeric_limits<double>::infinity();
  const double target = (K > 0.0) ? (1.0 - c) / K : (1.0 + c) / (-K);
  return std::log(target) / (cf.g * cf.n);
}

PhasePortrait spherical_phase_portrait(const weyl::RootSystem& rs,
                                       int orbit_count) {
  require_supported(rs);
  if (orbit_count < 3) throw ConfigError("need at least three orbits");
  PhasePortrait pp;
  const auto& sp = rs.spec();
  pp.g = sp.g;
  pp.m1 = sp.m1;
  pp.m2 = (sp.g % 2 == 1) ? sp.m1 : sp.m2;
  pp.n = rs.n();
  pp.theta_min = minimal_angle(rs);

  const double wall = kPi / pp.g;
  std::vector<double> starts;
  starts.reserve(orbit_count);
  for (int i = 0; i < orbit_count; ++i)
    starts.push_back(wall * (i + 1) / (orbit_count + 1));
  // Replace the start closest to the stationary angle by the exact value so
  // the portrait always contains the fixed orbit.
  auto closest = std::min_element(
      starts.begin(), starts.end(), [&](double a, double b) {
        return std::abs(a - pp.theta_min) < std::abs(b - pp.theta_min);
      });
  *closest = pp.theta_min;

  const int samples = 64;
  for (double th0 : starts) {
    ClosedForm cf = make_closed_form(rs, th0);
    SphericalOrbit orb;
    orb.theta0 = th0;
    orb.T = spherical_collapse_time(cf);
    orb.limit_wall = std::isfinite(orb.T) ? cf.limit_wall : -1;
    const double t_end =
        std::isfinite(orb.T) ? orb.T : 2.0 / pp.n;  // flat orbit: fixed window
    for (int i = 0; i <= samples; ++i) {
      const double t = t_end * i / samples;
      orb.samples.emplace_back(t, spherical_theta_at(cf, t));
    }
    pp.orbits.push_back(std::move(orb));
  }
  return pp;
}

}  // namespace isoflow::rank2
