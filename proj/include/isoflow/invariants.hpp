#pragma once

#include "isoflow/exactpoly.hpp"
#include "isoflow/rootsystem.hpp"
#include "isoflow/types.hpp"

#include <string>
#include <vector>

namespace isoflow::invariants {

// The chamber flow pushes forward to a polynomial vector field in a basis of
// invariant polynomial coordinates, and for the families supported here that
// field is triangular: y_r' = constant + coeff * y_src with src < r.
//
// Coordinate conventions (see eval_invariants):
//   A(k)   sigma_1..sigma_{k+1}  elementary symmetric in x_1..x_{k+1}
//   B(k)   zeta_1..zeta_k        elementary symmetric in x_i^2
//   D(k)   zeta_1..zeta_{k-1}, p where p = x_1*...*x_k carries the sign of
//                                the last coordinate (zeta_k = p^2)
//   I2(g)  P1 = |x|^2, P2 = Re((x1 + i x2)^g)
struct OdeRow {
  Rat constant = 0;
  int src = -1;  // -1: no linear term
  Rat coeff = 0;
};

struct Recursion {
  std::vector<OdeRow> rows;
  std::vector<std::string> names;
  std::vector<int> degrees;  // polynomial degree of each coordinate
};

int invariant_count(const weyl::RootSystem& rs);

// Exact triangular system for the euclidean flow in invariant coordinates.
// Supported: A(k), B(k), D(k), I2(3), I2(4), I2(6), and I2(g) for odd g
// (where the top coordinate is conserved for degree reasons).  Other even g
// throw UnsupportedFamilyError.
Recursion exact_recursion(const weyl::RootSystem& rs);

// The right-hand side of the pushed-forward field at coordinate vector y.
Vec eta_eval(const Recursion& rec, const Vec& y);

// Invariant coordinates of a point (any point of the ambient space; the
// coordinates are Weyl-invariant).
Vec eval_invariants(const weyl::RootSystem& rs, const Vec& x);

struct RecoveredPoint {
  Vec x;                       // representative in the closed chamber
  bool boundary_contact = false;
  std::vector<int> vanishing;  // wall indices met within tolerance
};

// Inverse of eval_invariants into the closed chamber, by real polynomial
// rooting (companion matrix + Newton polish).  Throws NotInImageError when y
// does not come from any chamber point (complex roots, negative squares, or
// |P2| > |x|^g).
RecoveredPoint recover_point(const weyl::RootSystem& rs, const Vec& y);

// Exact coordinate trajectory.  Euclidean coordinates are polynomials in t;
// spherical ones are finite sums of e^{q n t} times polynomials (the leading
// exponent of coordinate r is its degree s_r).
struct InvariantTrajectory {
  bool spherical = false;
  int n = 0;
  std::vector<std::string> names;
  std::vector<int> degrees;
  std::vector<ExpPoly> coords;

  double evaluate(int coord, double t) const;
  Vec evaluate_all(double t) const;
};

InvariantTrajectory exact_trajectory(const weyl::RootSystem& rs, const Vec& x0,
                                     bool spherical);

struct ExactCollapse {
  double T = 0.0;
  RecoveredPoint limit;
  double radial_bound = 0.0;  // |x0|^2 / (2n); T <= bound always,
                              // equality exactly for the minimal direction
};

// First boundary contact of the exact coordinate path: closed forms for the
// rank-2 families, otherwise a scan plus bisection on the recoverability
// predicate (first time the recovery polynomial acquires a multiple root or
// leaves the admissible region).
ExactCollapse exact_collapse_time(const weyl::RootSystem& rs, const Vec& x0);

}  // namespace isoflow::invariants
