#include "isoflow/rootsystem.hpp"

#include <algorithm>
#include <cmath>

namespace isoflow::weyl {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Min-norm point of conv{p_0, ..., p_{s-1}} by Wolfe's algorithm.  The sets
// here are tiny (at most a few dozen roots), so the dense affine solves are
// negligible.  Deterministic: no randomization, fixed tie-breaking by index.
Vec min_norm_point(const std::vector<Vec>& pts) {
  const int n = static_cast<int>(pts.size());
  const int d = static_cast<int>(pts[0].size());
  std::vector<int> corral{0};
  std::vector<double> lam{1.0};
  Vec w = pts[0];

  auto affine_solution = [&](const std::vector<int>& idx, Eigen::VectorXd& mu) {
    // Minimize |sum mu_i p_i|^2 subject to sum mu_i = 1.
    const int s = static_cast<int>(idx.size());
    Mat sys(s + 1, s + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s + 1);
    for (int a = 0; a < s; ++a) {
      for (int b = 0; b < s; ++b) sys(a, b) = pts[idx[a]].dot(pts[idx[b]]);
      sys(a, s) = 1.0;
      sys(s, a) = 1.0;
    }
    sys(s, s) = 0.0;
    rhs(s) = 1.0;
    Eigen::VectorXd sol = sys.fullPivLu().solve(rhs);
    mu = sol.head(s);
  };

  for (int major = 0; major < 1000; ++major) {
    // Most violated vertex.
    int best = 0;
    double best_val = w.dot(pts[0]);
    for (int i = 1; i < n; ++i) {
      double v = w.dot(pts[i]);
      if (v < best_val - 1e-15) {
        best_val = v;
        best = i;
      }
    }
    if (w.squaredNorm() - best_val <= 1e-14 * std::max(1.0, w.squaredNorm()))
      break;
    if (std::find(corral.begin(), corral.end(), best) == corral.end()) {
      corral.push_back(best);
      lam.push_back(0.0);
    }

    for (int minor = 0; minor < 1000; ++minor) {
      Eigen::VectorXd mu;
      affine_solution(corral, mu);
      if ((mu.array() > 1e-12).all()) {
        lam.assign(mu.data(), mu.data() + mu.size());
        break;
      }
      // Step from lam toward mu until the first weight hits zero; drop it.
      double theta = 1.0;
      for (int i = 0; i < mu.size(); ++i) {
        if (mu(i) < 1e-12 && lam[i] - mu(i) > 0.0)
          theta = std::min(theta, lam[i] / (lam[i] - mu(i)));
      }
      std::vector<int> next_corral;
      std::vector<double> next_lam;
      for (int i = 0; i < mu.size(); ++i) {
        double v = (1.0 - theta) * lam[i] + theta * mu(i);
        if (v > 1e-12) {
          next_corral.push_back(corral[i]);
          next_lam.push_back(v);
        }
      }
      corral.swap(next_corral);
      lam.swap(next_lam);
    }

    w = Vec::Zero(d);
    for (size_t i = 0; i < corral.size(); ++i) w += lam[i] * pts[corral[i]];
  }
  return w;
}

}  // namespace

RootSystem::RootSystem(const RootSystemSpec& spec) : spec_(spec) {
  const auto fail = [](const std::string& msg) {
    throw UnsupportedFamilyError(msg);
  };
  if (spec_.m1 < 1 || spec_.m2 < 1) fail("multiplicities must be >= 1");
  switch (spec_.family) {
    case Family::A:
      if (spec_.k < 1 || spec_.k > 12) fail("A(k) requires 1 <= k <= 12");
      if (spec_.m1 != spec_.m2) fail("A(k) has a single multiplicity class");
      break;
    case Family::B:
      if (spec_.k < 2 || spec_.k > 12) fail("B(k) requires 2 <= k <= 12");
      break;
    case Family::D:
      if (spec_.k < 3 || spec_.k > 12) fail("D(k) requires 3 <= k <= 12");
      if (spec_.m1 != spec_.m2) fail("D(k) has a single multiplicity class");
      break;
    case Family::I2:
      if (spec_.g < 3 || spec_.g > 720) fail("I2(g) requires 3 <= g <= 720");
      if (spec_.g % 2 == 1 && spec_.m1 != spec_.m2)
        fail("I2(g) with odd g has a single multiplicity class");
      break;
  }
  build_roots();
  n_ = 0;
  for (int m : mult_) n_ += m;
  compute_center();
}

void RootSystem::build_roots() {
  const int k = spec_.k;
  switch (spec_.family) {
    case Family::A: {
      // Roots (e_i - e_j)/sqrt(2), i < j, inside the trace-zero hyperplane of
      // R^(k+1).  Chamber: x_1 < x_2 < ... < x_{k+1}.
      rank_ = k;
      dim_ = k + 1;
      for (int i = 0; i < k + 1; ++i) {
        for (int j = i + 1; j < k + 1; ++j) {
          Vec r = Vec::Zero(dim_);
          r(i) = 1.0 / std::sqrt(2.0);
          r(j) = -1.0 / std::sqrt(2.0);
          roots_.push_back(r);
          mult_.push_back(spec_.m1);
        }
      }
      // Orthonormal (Helmert) basis of the trace-zero hyperplane.
      span_basis_ = Mat::Zero(dim_, rank_);
      for (int j = 1; j <= k; ++j) {
        double s = 1.0 / std::sqrt(static_cast<double>(j) * (j + 1));
        for (int i = 0; i < j; ++i) span_basis_(i, j - 1) = s;
        span_basis_(j, j - 1) = -j * s;
      }
      break;
    }
    case Family::B: {
      // Short class e_i (multiplicity m2), long class (e_i +- e_j)/sqrt(2)
      // (multiplicity m1).  Chamber: x_1 < x_2 < ... < x_k < 0.
      rank_ = k;
      dim_ = k;
      for (int i = 0; i < k; ++i) {
        Vec r = Vec::Zero(dim_);
        r(i) = 1.0;
        roots_.push_back(r);
        mult_.push_back(spec_.m2);
      }
      for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
          Vec rm = Vec::Zero(dim_), rp = Vec::Zero(dim_);
          rm(i) = 1.0 / std::sqrt(2.0);
          rm(j) = -1.0 / std::sqrt(2.0);
          rp(i) = 1.0 / std::sqrt(2.0);
          rp(j) = 1.0 / std::sqrt(2.0);
          roots_.push_back(rm);
          mult_.push_back(spec_.m1);
          roots_.push_back(rp);
          mult_.push_back(spec_.m1);
        }
      }
      span_basis_ = Mat::Identity(dim_, rank_);
      break;
    }
    case Family::D: {
      // Roots (e_i +- e_j)/sqrt(2), i < j, uniform multiplicity.
      // Chamber: x_1 < ... < x_k with x_{k-1} + x_k < 0.
      rank_ = k;
      dim_ = k;
      for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
          Vec rm = Vec::Zero(dim_), rp = Vec::Zero(dim_);
          rm(i) = 1.0 / std::sqrt(2.0);
          rm(j) = -1.0 / std::sqrt(2.0);
          rp(i) = 1.0 / std::sqrt(2.0);
          rp(j) = 1.0 / std::sqrt(2.0);
          roots_.push_back(rm);
          mult_.push_back(spec_.m1);
          roots_.push_back(rp);
          mult_.push_back(spec_.m1);
        }
      }
      span_basis_ = Mat::Identity(dim_, rank_);
      break;
    }
    case Family::I2: {
      // g root lines in the plane; chamber is the sector 0 < theta < pi/g.
      // Stored directions are chosen on each line so every gap is negative on
      // the sector: line k sits at angle k*pi/g + pi/2, except k = 0 which
      // takes the opposite direction (0, -1).  Then <e^{i theta}, alpha_0> =
      // -sin(theta) and <e^{i theta}, alpha_k> = sin(theta - k*pi/g) < 0 for
      // 0 < theta < pi/g <= k*pi/g.
      const int g = spec_.g;
      rank_ = 2;
      dim_ = 2;
      for (int idx = 0; idx < g; ++idx) {
        double phi = (idx == 0) ? -kPi / 2.0 : idx * kPi / g + kPi / 2.0;
        Vec r(2);
        r << std::cos(phi), std::sin(phi);
        roots_.push_back(r);
        // For even g the line classes alternate: the theta = 0 mirror orbit
        // (even idx) carries m1, the adjacent orbit (odd idx) m2.
        if (g % 2 == 0)
          mult_.push_back((idx % 2 == 0) ? spec_.m1 : spec_.m2);
        else
          mult_.push_back(spec_.m1);
      }
      span_basis_ = Mat::Identity(2, 2);
      break;
    }
  }
}

void RootSystem::compute_center() {
  Vec w = min_norm_point(roots_);
  double wn = w.norm();
  if (!(wn > 1e-12))
    throw ComputeError("chamber center: min-norm point degenerate");
  center_ = -w / wn;
  Vec gaps = signed_gaps(center_);
  center_min_gap_ = gaps.cwiseAbs().minCoeff();

  // Optimality certificate for the concave max-min problem: at the optimum,
  // min_i <alpha_i, w> = |w|^2 (so every wall distance from -w/|w| is at
  // least |w|), and the chamber orientation makes all signed gaps negative.
  double min_dot = roots_[0].dot(w);
  for (const Vec& r : roots_) min_dot = std::min(min_dot, r.dot(w));
  if (std::abs(min_dot - wn * wn) > 1e-9 * std::max(1.0, wn * wn))
    throw ComputeError("chamber center: optimality certificate failed");
  if (!in_open_chamber(center_))
    throw ComputeError("chamber center: sign normalization violated");
}

Vec RootSystem::project_to_span(const Vec& x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw ConfigError("point has wrong dimension for " + name());
  if (rank_ == dim_) return x;
  // Only A(k) has rank < dim, with span = trace-zero hyperplane.  Subtract
  // the mean component instead of recomposing through span_basis_: removing
  // the (small) complement part leaves points already in the span untouched.
  return x - Vec::Constant(dim_, x.sum() / dim_);
}

Vec RootSystem::signed_gaps(const Vec& x) const {
  Vec g(root_count());
  for (int i = 0; i < root_count(); ++i) g(i) = roots_[i].dot(x);
  return g;
}

double RootSystem::min_abs_gap(const Vec& x,
                               const std::vector<int>& indices) const {
  double best = std::numeric_limits<double>::infinity();
  if (indices.empty()) {
    for (const Vec& r : roots_) best = std::min(best, std::abs(r.dot(x)));
  } else {
    for (int i : indices) best = std::min(best, std::abs(roots_[i].dot(x)));
  }
  return best;
}

bool RootSystem::in_open_chamber(const Vec& x) const {
  for (const Vec& r : roots_)
    if (r.dot(x) >= 0.0) return false;
  return true;
}

bool RootSystem::in_closed_chamber(const Vec& x, double tol) const {
  for (const Vec& r : roots_)
    if (r.dot(x) > tol) return false;
  return true;
}

Stratum RootSystem::stratum_of(const Vec& x, double tol) const {
  Stratum s;
  for (int i = 0; i < root_count(); ++i) {
    double gap = roots_[i].dot(x);
    if (gap > tol)
      throw OutsideChamberError(name() + ": point outside closed chamber (gap " +
                                std::to_string(gap) + ")");
    if (std::abs(gap) <= tol) {
      s.vanishing.push_back(i);
      s.fiber_dim += mult_[i];
    } else {
      s.active.push_back(i);
      s.n_sigma += mult_[i];
    }
  }
  return s;
}

Vec RootSystem::reflect(int root_index, const Vec& x) const {
  const Vec& a = roots_.at(root_index);
  return x - 2.0 * a.dot(x) * a;
}

Vec RootSystem::random_interior_unit(Rng& rng, double margin) const {
  for (int attempt = 0; attempt < 200000; ++attempt) {
    Vec z(rank_);
    for (int i = 0; i < rank_; ++i) z(i) = rng.normal();
    Vec x = span_basis_ * z;
    double nn = x.norm();
    if (nn < 1e-12) continue;
    x /= nn;
    if ((signed_gaps(x).array() <= -margin).all()) return x;
  }
  throw NoConvergenceError(name() + ": interior sampling failed; margin too large?");
}

std::string RootSystem::name() const {
  switch (spec_.family) {
    case Family::A:
      return "A(" + std::to_string(spec_.k) + ")";
    case Family::B:
      return "B(" + std::to_string(spec_.k) + ")";
    case Family::D:
      return "D(" + std::to_string(spec_.k) + ")";
    case Family::I2:
      return "I2(" + std::to_string(spec_.g) + ")";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "A") return Family::A;
  if (s == "B") return Family::B;
  if (s == "D") return Family::D;
  if (s == "I2") return Family::I2;
  throw ConfigError("unknown family '" + s + "' (expected A, B, D, or I2)");
}

std::string family_to_string(Family f) {
  switch (f) {
    case Family::A:
      return "A";
    case Family::B:
      return "B";
    case Family::D:
      return "D";
    case Family::I2:
      return "I2";
  }
  return "?";
}

}  // namespace isoflow::weyl
