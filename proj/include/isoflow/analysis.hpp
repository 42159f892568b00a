#pragma once

#include "isoflow/flow.hpp"
#include "isoflow/rootsystem.hpp"
#include "isoflow/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace isoflow::analysis {

// The unique interior unit direction whose orbit is a fixed point of the
// spherical flow (equivalently: the euclidean flow from it is radial).
struct MinimalPoint {
  Vec x;                  // unit norm, open chamber
  double residual = 0.0;  // |mcv_euclidean(x) + n x|
  int iterations = 0;
};

// Newton iteration on the chamber sphere for mcv_euclidean(x) + n x = 0,
// started at the chamber center (or at *init when given).  Throws
// NoConvergenceError if the tangential residual does not reach tol.
MinimalPoint find_minimal_point(const weyl::RootSystem& rs,
                                const Vec* init = nullptr, double tol = 1e-12,
                                int max_iter = 200);

struct SingularityClass {
  std::vector<int> active_walls;
  int fiber_dim = 0;
  bool top_stratum = false;
  bool type_one = false;     // single vanishing line => curvature blow-up is
                             // type I (bounded by c0/(T-t))
  std::string fiber_type;    // Coxeter type of the vanishing sub-root-system,
                             // e.g. "A1", "A2", "A1xA1", "B2", "A3"
  double rate_over_2m = 0.0;    // rate_estimate / (2 fiber_dim); -> 1
  double typeI_estimate = 0.0;  // Q(x(t)) (T-t) tail estimate; -> 1/2 on a
                                // top stratum
};

SingularityClass classify_singularity(const weyl::RootSystem& rs,
                                      const flow::CollapseReport& report);

// Coxeter type of an arbitrary subset of root indices (decomposed into
// orthogonal irreducible components, joined by "x").
std::string subsystem_type(const weyl::RootSystem& rs,
                           const std::vector<int>& indices);

struct SeparationPair {
  int a = 0, b = 0;
  // Euclidean variant: smallest increment of |x_a - x_b|^2 between
  // consecutive grid times (nonnegative up to tolerance noise).
  double min_increment = 0.0;
  // Spherical variant: smallest slope of log |x_a - x_b|^2 between
  // consecutive grid times on [0, window_end]; at least 2n in theory.
  double min_log_slope = 0.0;
  double limit_separation = 0.0;  // |x_limit_a - x_limit_b|
};

struct SeparationReport {
  bool spherical = false;
  double window_end = 0.0;
  std::vector<SeparationPair> pairs;
};

// Pairwise separation diagnostics for starts on a common sphere.
SeparationReport separation_check(const weyl::RootSystem& rs,
                                  const std::vector<Vec>& starts,
                                  bool spherical, double tol = 1e-10);

struct CorrespondenceResult {
  double T_euclidean = 0.0;
  double T_spherical = 0.0;
  // sup over the grid of |sqrt(1-2nt) x_sph(-log(1-2nt)/(2n)) - x_euc(t)|
  // for t up to 0.9 T_euclidean.
  double max_deviation = 0.0;
  // |T_spherical + log(1 - 2n T_euclidean)/(2n)|
  double time_residual = 0.0;
};

// Checks that the spherical flow, reparametrized and rescaled, reproduces the
// euclidean flow from the same unit start.
CorrespondenceResult correspondence_check(const weyl::RootSystem& rs,
                                          const Vec& x0, double tol = 1e-10);

// Stratified portrait of the spherical flow on the rank-3 chamber of A(3):
// a geodesic triangle with two A2 vertices and one A1xA1 vertex, the minimal
// point in its interior, three separatrices joining it to the vertices, and
// a region decomposition predicting the limit wall of every interior start.
struct A3Portrait {
  Vec p0;                                  // minimal direction
  std::array<Vec, 3> vertices;             // p1, p2 (A2 fibers), p3 (A1xA1)
  std::array<double, 3> angles;            // interior angles at the vertices
  std::array<std::vector<Vec>, 3> separatrices;  // sampled p_i -> p0
  std::array<int, 3> edge_walls{};         // root index vanishing on the edge
                                           // opposite vertex i+1

  struct Start {
    Vec x;
    std::array<double, 2> planar{};  // cone-barycentric plot coordinates
    int region = 0;          // 1..3 (region D_r), 0 if unclassified
    int predicted_wall = -1;  // root index of the predicted limit wall
    int observed_wall = -1;   // vanishing root of the numeric limit
    bool match = false;
    double T = 0.0;  // spherical collapse time
  };
  std::vector<Start> starts;
  double match_fraction = 0.0;

  // Planar images (cone-barycentric) used for plotting and classification.
  std::array<std::array<double, 2>, 3> vertices_planar{};
  std::array<double, 2> p0_planar{};
  std::array<std::vector<std::array<double, 2>>, 3> separatrices_planar;
};

// Throws ConfigError unless rs is A(3).
A3Portrait a3_portrait(const weyl::RootSystem& rs, int n_starts = 300,
                       std::uint64_t seed = 0);

}  // namespace isoflow::analysis
