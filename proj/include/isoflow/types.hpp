#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace isoflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error taxonomy.  ConfigError covers malformed or unsupported input (a CLI
// maps it to exit code 1); ComputeError covers failures on well-formed input
// (exit code 2).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct ComputeError : Error {
  using Error::Error;
};

// Unsupported family / rank / multiplicity pattern.
struct UnsupportedFamilyError : ConfigError {
  using ConfigError::ConfigError;
};

// A point that was required to lie in the closed chamber does not.
struct OutsideChamberError : ComputeError {
  using ComputeError::ComputeError;
};

// A point sits on a wall where the requested vector field is singular.
struct WallContactError : ComputeError {
  using ComputeError::ComputeError;
};

// Spherical-variant input does not have unit norm.
struct NotOnSphereError : ComputeError {
  using ComputeError::ComputeError;
};

// Collapse diagnostics requested for a trajectory that ran to t_end.
struct NotCollapsedError : ComputeError {
  using ComputeError::ComputeError;
};

// The adaptive step shrank below the representable floor away from a wall.
struct StepUnderflowError : ComputeError {
  using ComputeError::ComputeError;
};

// Invariant coordinates do not come from any chamber point.
struct NotInImageError : ComputeError {
  using ComputeError::ComputeError;
};

// An iterative solver failed to reach its tolerance.
struct NoConvergenceError : ComputeError {
  using ComputeError::ComputeError;
};

// Deterministic RNG.  mt19937_64 has a fully specified sequence, and the
// mappings below avoid std::uniform_real_distribution (whose output is
// implementation-defined), so sampled values are reproducible across
// platforms and toolchains for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via Box-Muller on deterministic uniforms.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return mag * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace isoflow
