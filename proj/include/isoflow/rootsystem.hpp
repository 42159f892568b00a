#pragma once

#include "isoflow/types.hpp"

#include <string>
#include <vector>

namespace isoflow::weyl {

enum class Family { A, B, D, I2 };

// Validated description of a marked root system: a finite Coxeter family at a
// given rank, with an integer multiplicity attached to each root line.
//
// Multiplicity classes:
//   A(k), D(k)           one class, `m` on every root.
//   B(k)                 `m2` on the short class e_i, `m1` on (e_i +- e_j)/sqrt(2).
//   I2(g), g odd         one class `m` (all lines are conjugate).
//   I2(g), g even        two line classes, `m1` / `m2` alternating; for g = 4
//                        `m1` sits on the coordinate axes and `m2` on the
//                        diagonals.  (Note this labels the axis class the
//                        opposite way from B(2), where the axes e_i carry m2:
//                        B(2) with (m1,m2) = (a,b) is the same marked system
//                        as I2(4) with (m1,m2) = (b,a).)
struct RootSystemSpec {
  Family family = Family::A;
  int k = 0;        // rank parameter for A/B/D
  int g = 0;        // line count for I2
  int m1 = 1;       // first multiplicity class
  int m2 = 1;       // second multiplicity class (== m1 for uniform families)
  bool uniform = true;  // true when specified via a single `m`
};

struct Stratum {
  std::vector<int> vanishing;  // root indices with <x, alpha> == 0 (within tol)
  std::vector<int> active;     // complementary root indices
  int n_sigma = 0;             // multiplicity sum over active roots
  int fiber_dim = 0;           // multiplicity sum over vanishing roots
};

// A marked root system realized in coordinates, with all positive roots
// sign-normalized so that <x, alpha> < 0 for every x in the open chamber.
// Roots are stored at unit length; the flow field is invariant under both
// alpha -> -alpha and alpha -> c*alpha, so this costs no generality.
class RootSystem {
 public:
  explicit RootSystem(const RootSystemSpec& spec);

  const RootSystemSpec& spec() const { return spec_; }
  Family family() const { return spec_.family; }
  int rank() const { return rank_; }
  int dim() const { return dim_; }              // ambient coordinate count
  int root_count() const { return static_cast<int>(roots_.size()); }
  const Vec& root(int i) const { return roots_[i]; }
  int multiplicity(int i) const { return mult_[i]; }
  int n() const { return n_; }                  // sum of all multiplicities

  // Orthonormal basis of span(roots) as columns (dim x rank).  For A(k) the
  // span is the trace-zero hyperplane of R^(k+1); elsewhere it is everything.
  const Mat& span_basis() const { return span_basis_; }

  // Orthogonal projection onto span(roots).
  Vec project_to_span(const Vec& x) const;

  // Signed gaps <x, alpha_i>; all negative on the open chamber.
  Vec signed_gaps(const Vec& x) const;

  // min_i |<x, alpha_i>| over the given root indices (all roots if empty).
  double min_abs_gap(const Vec& x, const std::vector<int>& indices = {}) const;

  bool in_open_chamber(const Vec& x) const;
  bool in_closed_chamber(const Vec& x, double tol) const;

  // Vanishing / active split of the root set at x.  Throws
  // OutsideChamberError if some gap exceeds +tol.
  Stratum stratum_of(const Vec& x, double tol) const;

  // Reflection across the wall of root i.
  Vec reflect(int root_index, const Vec& x) const;

  // Canonical chamber center: the unit vector maximizing the smallest wall
  // distance min_i |<x, alpha_i>|.  Deterministic; certified optimal at
  // construction (see certificate in the implementation).
  const Vec& chamber_center() const { return center_; }
  double center_min_gap() const { return center_min_gap_; }

  // Uniform-ish random unit vector in the open chamber with all wall gaps
  // <= -margin, by rejection from the sphere in span(roots).
  Vec random_interior_unit(Rng& rng, double margin = 0.02) const;

  // Display name such as "A(3)" or "I2(4)".
  std::string name() const;

 private:
  RootSystemSpec spec_;
  int rank_ = 0;
  int dim_ = 0;
  int n_ = 0;
  std::vector<Vec> roots_;
  std::vector<int> mult_;
  Mat span_basis_;
  Vec center_;
  double center_min_gap_ = 0.0;

  void build_roots();
  void compute_center();
};

// Parse helpers used by the JSON layer and the CLI.
Family family_from_string(const std::string& s);
std::string family_to_string(Family f);

}  // namespace isoflow::weyl
