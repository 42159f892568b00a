#pragma once

#include "isoflow/rootsystem.hpp"
#include "isoflow/types.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace isoflow::flow {

enum class VariantKind { Euclidean, Spherical, Focal };

// Which singular ODE to integrate.
//   Euclidean:  x' = -sum_a m_a a / <x,a>                  (interior starts)
//   Spherical:  x' = -sum_a m_a a / <x,a> + n x, |x| = 1
//   Focal:      Euclidean field restricted to a boundary stratum; the sum
//               runs over the roots NOT vanishing on the stratum.
struct Variant {
  VariantKind kind = VariantKind::Euclidean;
  std::vector<int> vanishing;  // focal only: pinned root indices

  static Variant euclidean() { return {VariantKind::Euclidean, {}}; }
  static Variant spherical() { return {VariantKind::Spherical, {}}; }
  static Variant focal(std::vector<int> pinned) {
    return {VariantKind::Focal, std::move(pinned)};
  }
};

// Mean curvature vector fields.
Vec mcv_euclidean(const weyl::RootSystem& rs, const Vec& x);
Vec mcv_spherical(const weyl::RootSystem& rs, const Vec& x);
Vec mcv_focal(const weyl::RootSystem& rs, const std::vector<int>& vanishing,
              const Vec& x);

// Squared second-fundamental-form bound Q(x) = sum_a m_a / <x,a>^2 over the
// given root indices (all roots when empty).
double second_fundamental_bound(const weyl::RootSystem& rs, const Vec& x,
                                const std::vector<int>& indices = {});

struct Sample {
  double t = 0.0;
  Vec x;
  Vec dx;                 // field value at x (exact derivative of the step)
  double norm_sq = 0.0;
  double min_wall_gap = 0.0;     // min |<x,a>| over active roots
  double radial_residual = 0.0;  // | |x|^2 - (|x0|^2 - 2 n_eff t) |, or
                                 // | |x|^2 - 1 | for the spherical variant
};

struct CollapseReport {
  double T = 0.0;                 // extrapolated collapse time
  Vec x_limit;                    // limit point (projected onto its stratum)
  std::vector<int> active_walls;  // root indices vanishing at x_limit
  int fiber_dim = 0;              // multiplicity sum over active_walls
  double rate_estimate = 0.0;     // lim |x(t)-x(T)|^2/(T-t); 2m in theory
  double typeI_estimate = 0.0;    // lim Q(x(t))(T-t); 1/2 on a top stratum
  bool top_stratum = false;       // exactly one wall reached
};

enum class StopReason { ReachedTEnd, Collapse };

struct Trajectory {
  Variant variant;
  std::vector<int> active_roots;  // roots entering the field / diagnostics
  double n_effective = 0.0;       // multiplicity sum over active_roots
  Vec x0;
  double tol = 0.0;
  std::vector<Sample> samples;
  StopReason stop = StopReason::ReachedTEnd;
  std::optional<CollapseReport> collapse;

  double t_front() const { return samples.front().t; }
  double t_back() const { return samples.back().t; }

  // Dense output: cubic Hermite interpolation on the accepted-step grid.
  // t is clamped to [t_front, t_back].
  Vec at(double t) const;
};

struct IntegrateOptions {
  double tol = 1e-10;     // local error tolerance (relative)
  double t_end = std::numeric_limits<double>::infinity();
  double wall_cap = 8.0;  // near-wall cap h <= wall_cap * gap^2 / |field|
  std::size_t max_steps = 4000000;
  bool want_collapse_report = true;
  double h0 = 0.0;        // initial step; 0 selects a scale-based default
};

// Integrate the chosen variant from x0 until blow-up (wall collapse) or
// t_end.  Throws WallContactError for euclidean/spherical starts on a wall,
// NotOnSphereError for non-unit spherical starts, OutsideChamberError for
// starts outside the open chamber.
Trajectory integrate(const weyl::RootSystem& rs, const Vec& x0,
                     const Variant& variant, const IntegrateOptions& opt = {});

// Extrapolate collapse data from an integrated trajectory.  The minimum wall
// gap obeys gap^2 ~ 2m(T-t) near the collapse time, so T comes from a linear
// fit of gap^2 against t, refined (euclidean/focal) through the radial law
// T = (|x0|^2 - |x_limit|^2)/(2 n_eff).  Throws NotCollapsedError if the
// trajectory ran to t_end instead of collapsing.
CollapseReport detect_collapse(const weyl::RootSystem& rs,
                               const Trajectory& traj);

// Parabolic rescaling: maps samples (t, x) to (r^2 t, r x), which solves the
// same euclidean equation.  Negative r lands in the antipodal chamber, where
// the sign normalization of the stored roots no longer holds; such calls are
// rejected unless allow_antipodal is set.
Trajectory scale_solution(const Trajectory& traj, double r,
                          bool allow_antipodal = false);

}  // namespace isoflow::flow
