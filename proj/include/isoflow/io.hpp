#pragma once

#include "isoflow/analysis.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/invariants.hpp"
#include "isoflow/rank2.hpp"
#include "isoflow/rootsystem.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace isoflow::io {

inline constexpr const char* kVersion = "0.1.0";

// --- Root-system spec JSON -------------------------------------------------
// Accepted shapes (strict: unknown keys are rejected):
//   {"family":"A"|"B"|"D","k":int,"m":int}
//   {"family":"B","k":int,"m1":int,"m2":int}
//   {"family":"I2","g":int,"m":int}
//   {"family":"I2","g":int,"m1":int,"m2":int}   (even g only)
weyl::RootSystemSpec parse_spec_json(const std::string& text);

// Canonical compact serialization: field order family, k|g, m|m1+m2;
// integers stay integers.  parse -> canonical is idempotent.
std::string canonical_spec_json(const weyl::RootSystemSpec& spec);

// --- Run configuration ------------------------------------------------------
struct RunConfig {
  weyl::RootSystemSpec spec;
  std::string variant = "euclidean";  // euclidean | spherical | focal
  std::vector<int> pinned;            // focal: pinned wall indices
  std::string initial = "center";     // center | minimal | theta | coords
  double theta = 0.0;                 // used when initial == "theta"
  std::vector<double> coords;         // used when initial == "coords"
  double tol = 1e-10;
  double t_end = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
};

// Canonical compact config echo embedded in every output file.
std::string config_echo(const RunConfig& cfg);

// Resolve the configured initial point (center/minimal/theta/coords).
Vec resolve_initial(const weyl::RootSystem& rs, const RunConfig& cfg);

// --- Emitters (all deterministic; floats at 17 significant digits in CSV,
// fixed 6 decimals in SVG; LF line endings) ----------------------------------
std::string trajectory_csv(const weyl::RootSystem& rs,
                           const flow::Trajectory& traj,
                           const RunConfig& cfg);

std::string collapse_json(const flow::CollapseReport& report,
                          const RunConfig& cfg,
                          const analysis::SingularityClass* cls = nullptr);

std::string minimal_json(const weyl::RootSystem& rs,
                         const analysis::MinimalPoint& mp,
                         const RunConfig& cfg);

// Exact coordinate trajectory; rational coefficients as "p/q" strings.
// Euclidean coordinates: {"name","s","coeffs"}.  Spherical ones:
// {"name","s","c1","h"} plus "h_exp" for exponential middle terms
// (e.g. the degree-6 coordinate of B(3), whose inhomogeneous part carries an
// e^{4nt} component).
std::string invariant_trajectory_json(
    const invariants::InvariantTrajectory& itraj, const RunConfig& cfg);

std::string exact_collapse_json(const weyl::RootSystem& rs,
                                const invariants::ExactCollapse& ec,
                                const RunConfig& cfg);

// Sampled recovered-point path of an exact trajectory, same CSV columns as
// trajectory_csv.
std::string exact_points_csv(const weyl::RootSystem& rs,
                             const invariants::InvariantTrajectory& itraj,
                             double t_hi, int samples, const RunConfig& cfg);

// Rank-2 spherical phase portrait (theta against t for each orbit).
std::string rank2_portrait_csv(const rank2::PhasePortrait& pp,
                               const RunConfig& cfg);
std::string rank2_portrait_svg(const rank2::PhasePortrait& pp,
                               const RunConfig& cfg);

// A(3) stratified portrait.
std::string a3_portrait_csv(const analysis::A3Portrait& p,
                            const RunConfig& cfg);
std::string a3_portrait_svg(const analysis::A3Portrait& p,
                            const RunConfig& cfg);

// Write via a temp file + rename so failed runs leave no partial output.
void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace isoflow::io
