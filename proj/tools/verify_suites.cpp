#include "verify_suites.hpp"

#include "isoflow/analysis.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/invariants.hpp"
#include "isoflow/rank2.hpp"
#include "isoflow/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <utility>

namespace isoflow::cli {
namespace {

using weyl::Family;
using weyl::RootSystem;
using weyl::RootSystemSpec;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

using CheckFn = std::function<std::pair<bool, std::string>()>;

void run_check(std::vector<Check>& out, std::string name, std::string subject,
               const CheckFn& fn) {
  Check c;
  c.name = std::move(name);
  c.subject = std::move(subject);
  try {
    auto [ok, detail] = fn();
    c.pass = ok;
    c.detail = std::move(detail);
  } catch (const UnsupportedFamilyError& e) {
    c.pass = true;
    c.detail = std::string("skipped: ") + e.what();
  } catch (const std::exception& e) {
    c.pass = false;
    c.detail = e.what();
  }
  out.push_back(std::move(c));
}

RootSystemSpec make(Family f, int rank_or_g, int m1, int m2) {
  RootSystemSpec s;
  s.family = f;
  if (f == Family::I2)
    s.g = rank_or_g;
  else
    s.k = rank_or_g;
  s.m1 = m1;
  s.m2 = m2;
  s.uniform = (m1 == m2);
  return s;
}

std::vector<RootSystemSpec> battery(
    const std::optional<RootSystemSpec>& spec) {
  if (spec) return {*spec};
  return {
      make(Family::A, 2, 1, 1),  make(Family::A, 3, 2, 2),
      make(Family::B, 2, 1, 1),  make(Family::B, 3, 1, 2),
      make(Family::D, 4, 1, 1),  make(Family::I2, 3, 1, 1),
      make(Family::I2, 4, 1, 2), make(Family::I2, 6, 1, 1),
  };
}

std::vector<double> grid(double lo, double hi, int count) {
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i)
    g[i] = lo + (hi - lo) * i / (count - 1);
  return g;
}

void family_suite(std::vector<Check>& out, const RootSystemSpec& spec,
                  std::uint64_t seed) {
  RootSystem rs(spec);
  const std::string tag = rs.name();
  Rng rng(seed);
  const int n = rs.n();

  run_check(out, "root-data", tag, [&]() -> std::pair<bool, std::string> {
    int count = 0, nsum = 0;
    const int k = spec.k, g = spec.g;
    switch (spec.family) {
      case Family::A:
        count = k * (k + 1) / 2;
        nsum = spec.m1 * count;
        break;
      case Family::B:
        count = k * k;
        nsum = k * spec.m2 + k * (k - 1) * spec.m1;
        break;
      case Family::D:
        count = k * (k - 1);
        nsum = spec.m1 * count;
        break;
      case Family::I2:
        count = g;
        nsum = (g % 2 != 0) ? g * spec.m1 : (g / 2) * (spec.m1 + spec.m2);
        break;
    }
    double worst = 0.0;
    for (int i = 0; i < rs.root_count(); ++i)
      worst = std::max(worst, std::abs(rs.root(i).norm() - 1.0));
    const bool ok = rs.root_count() == count && n == nsum && worst <= 1e-12;
    return {ok, "count " + std::to_string(rs.root_count()) + ", n " +
                    std::to_string(n) + ", |root|-1 <= " + num(worst)};
  });

  run_check(out, "chamber-normalization", tag,
            [&]() -> std::pair<bool, std::string> {
    const Vec gaps = rs.signed_gaps(rs.chamber_center());
    bool ok = gaps.maxCoeff() < 0.0;
    double worst = 0.0;
    for (int trial = 0; trial < 6; ++trial) {
      Vec x(rs.dim());
      for (int i = 0; i < rs.dim(); ++i) x[i] = rng.normal();
      const int r = static_cast<int>(rng.uniform() * rs.root_count());
      const Vec y = rs.reflect(r, x);
      worst = std::max(worst, (rs.reflect(r, y) - x).norm());
      worst = std::max(worst, std::abs(y.norm() - x.norm()));
    }
    ok = ok && worst <= 1e-12;
    return {ok, "center gap max " + num(gaps.maxCoeff()) +
                    ", reflection defect " + num(worst)};
  });

  run_check(out, "radial-identity", tag,
            [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    for (int s = 0; s < 3; ++s) {
      const Vec x0 = rs.random_interior_unit(rng);
      const auto traj = flow::integrate(rs, x0, flow::Variant::euclidean());
      for (const auto& smp : traj.samples)
        worst = std::max(worst, smp.radial_residual);
    }
    return {worst <= 1e-7, "max | |x|^2-(1-2nt) | = " + num(worst)};
  });

  run_check(out, "field-gradient-oracle", tag,
            [&]() -> std::pair<bool, std::string> {
    const auto rec = invariants::exact_recursion(rs);
    double worst = 0.0;
    for (int s = 0; s < 5; ++s) {
      const Vec x = rs.random_interior_unit(rng);
      const Vec f = flow::mcv_euclidean(rs, x);
      const Vec rhs = invariants::eta_eval(rec, invariants::eval_invariants(rs, x));
      const double h = 1e-6 / (1.0 + f.norm());
      const Vec diff = (invariants::eval_invariants(rs, x + h * f) -
                        invariants::eval_invariants(rs, x - h * f)) /
                       (2.0 * h);
      for (int j = 0; j < rhs.size(); ++j)
        worst = std::max(worst, std::abs(diff[j] - rhs[j]) /
                                    std::max(1.0, std::abs(rhs[j])));
    }
    return {worst <= 1e-6, "max rel derivative error " + num(worst)};
  });

  run_check(out, "weyl-invariance", tag,
            [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    for (int s = 0; s < 4; ++s) {
      const Vec x = rs.random_interior_unit(rng);
      const Vec y = invariants::eval_invariants(rs, x);
      const int r = static_cast<int>(rng.uniform() * rs.root_count());
      const Vec yr = invariants::eval_invariants(rs, rs.reflect(r, x));
      for (int j = 0; j < y.size(); ++j)
        worst = std::max(worst, std::abs(y[j] - yr[j]) /
                                    std::max(1.0, std::abs(y[j])));
    }
    return {worst <= 1e-12, "max rel deviation " + num(worst)};
  });

  run_check(out, "round-trip", tag, [&]() -> std::pair<bool, std::string> {
    double worst = 0.0;
    for (int s = 0; s < 3; ++s) {
      const Vec x = rs.random_interior_unit(rng);
      const auto rp = invariants::recover_point(rs, invariants::eval_invariants(rs, x));
      worst = std::max(worst, (rp.x - x).norm());
    }
    return {worst <= 1e-9, "max |recover(eval(x)) - x| = " + num(worst)};
  });

  run_check(out, "exact-vs-numeric", tag,
            [&]() -> std::pair<bool, std::string> {
    const Vec x0 = rs.random_interior_unit(rng);
    const auto itraj = invariants::exact_trajectory(rs, x0, false);
    const auto traj = flow::integrate(rs, x0, flow::Variant::euclidean());
    const double T = traj.collapse ? traj.collapse->T : traj.t_back();
    double worst = 0.0;
    for (double t : grid(0.0, std::min(0.9 * T, traj.t_back()), 7)) {
      const Vec ye = itraj.evaluate_all(t);
      const Vec yn = invariants::eval_invariants(rs, traj.at(t));
      for (int j = 0; j < ye.size(); ++j)
        worst = std::max(worst, std::abs(ye[j] - yn[j]) /
                                    std::max(1.0, std::abs(ye[j])));
    }
    return {worst <= 1e-6, "max rel deviation " + num(worst)};
  });

  run_check(out, "minimal-point", tag, [&]() -> std::pair<bool, std::string> {
    const auto mp = analysis::find_minimal_point(rs);
    const auto traj = flow::integrate(rs, mp.x, flow::Variant::euclidean());
    // Drift off the ray is checked at stored samples (interpolating between
    // adaptive steps adds O(h^4) error) and only while the radius is still
    // macroscopic: the ray is tangentially unstable, so rounding noise in
    // the start must eventually blow up as the radius vanishes.
    double drift = 0.0;
    for (const auto& s : traj.samples) {
      if (s.x.squaredNorm() < 0.2) break;
      drift = std::max(drift,
                       (s.x - std::sqrt(1.0 - 2.0 * n * s.t) * mp.x).norm());
    }
    const double t_err =
        traj.collapse ? std::abs(traj.collapse->T - 0.5 / n) : 1.0;
    const bool ok = mp.residual <= 1e-10 && drift <= 1e-8 && t_err <= 1e-6;
    return {ok, "residual " + num(mp.residual) + ", homothety drift " +
                    num(drift) + ", |T - 1/2n| = " + num(t_err)};
  });

  if (spec.family == Family::I2) {
    run_check(out, "closed-form-angle", tag,
              [&]() -> std::pair<bool, std::string> {
      const double wedge = M_PI / spec.g;
      double worst_theta = 0.0, worst_t = 0.0;
      for (int s = 0; s < 5; ++s) {
        const double theta0 = wedge * (0.08 + 0.84 * rng.uniform());
        const auto cf = rank2::make_closed_form(rs, theta0);
        const Vec x0 = rank2::point_at(cf, 0.0);
        const auto traj = flow::integrate(rs, x0, flow::Variant::euclidean());
        for (double t : grid(0.0, std::min(0.9 * cf.T, traj.t_back()), 9)) {
          const Vec x = traj.at(t);
          worst_theta = std::max(worst_theta, std::abs(std::atan2(x[1], x[0]) -
                                                       rank2::theta_at(cf, t)));
        }
        if (traj.collapse)
          worst_t = std::max(worst_t, std::abs(traj.collapse->T - cf.T));
        else
          worst_t = 1.0;
      }
      const bool ok = worst_theta <= 1e-6 && worst_t <= 1e-4;
      return {ok, "max |theta err| = " + num(worst_theta) +
                      ", max |T err| = " + num(worst_t)};
    });
  }

  run_check(out, "scaling-law", tag, [&]() -> std::pair<bool, std::string> {
    const Vec x0 = rs.random_interior_unit(rng);
    const auto base = flow::integrate(rs, x0, flow::Variant::euclidean());
    double worst = 0.0;
    for (double r : {0.5, 2.0}) {
      const auto scaled = flow::scale_solution(base, r);
      const auto direct = flow::integrate(rs, Vec(r * x0), flow::Variant::euclidean());
      const double hi = 0.8 * std::min(scaled.t_back(), direct.t_back());
      for (double t : grid(0.0, hi, 7))
        worst = std::max(worst, (scaled.at(t) - direct.at(t)).norm() / r);
    }
    return {worst <= 1e-6, "max scaled deviation " + num(worst)};
  });

  run_check(out, "spherical-invariant-law", tag,
            [&]() -> std::pair<bool, std::string> {
    const Vec x0 = rs.random_interior_unit(rng);
    const auto itraj = invariants::exact_trajectory(rs, x0, true);
    flow::IntegrateOptions opt;
    opt.t_end = 80.0 / n;
    const auto traj = flow::integrate(rs, x0, flow::Variant::spherical(), opt);
    double worst = 0.0;
    for (double t : grid(0.0, 0.8 * traj.t_back(), 7)) {
      const Vec ye = itraj.evaluate_all(t);
      const Vec yn = invariants::eval_invariants(rs, traj.at(t));
      for (int j = 0; j < ye.size(); ++j)
        worst = std::max(worst, std::abs(ye[j] - yn[j]) /
                                    std::max(1.0, std::abs(ye[j])));
    }
    return {worst <= 1e-6, "max rel residual " + num(worst)};
  });

  run_check(out, "separation", tag, [&]() -> std::pair<bool, std::string> {
    const std::vector<Vec> starts = {rs.random_interior_unit(rng),
                                     rs.random_interior_unit(rng)};
    const auto euc = analysis::separation_check(rs, starts, false);
    const auto sph = analysis::separation_check(rs, starts, true);
    const bool ok = euc.pairs[0].min_increment >= -1e-9 &&
                    sph.pairs[0].min_log_slope >= 2.0 * n - 0.01 &&
                    sph.pairs[0].limit_separation > 1e-6;
    return {ok, "euclidean min increment " + num(euc.pairs[0].min_increment) +
                    ", spherical log-slope " + num(sph.pairs[0].min_log_slope) +
                    " (2n = " + std::to_string(2 * n) + ")"};
  });

  run_check(out, "correspondence", tag,
            [&]() -> std::pair<bool, std::string> {
    const auto res = analysis::correspondence_check(rs, rs.random_interior_unit(rng));
    const bool ok = res.max_deviation <= 1e-5 && res.time_residual <= 1e-4;
    return {ok, "deviation " + num(res.max_deviation) + ", time residual " +
                    num(res.time_residual)};
  });

  if (spec.family == Family::A && spec.k == 3) {
    run_check(out, "stratified-portrait", tag,
              [&]() -> std::pair<bool, std::string> {
      const auto p = analysis::a3_portrait(rs, 48, seed);
      const double ang = std::max(
          {std::abs(p.angles[0] - M_PI / 3), std::abs(p.angles[1] - M_PI / 3),
           std::abs(p.angles[2] - M_PI / 2)});
      const bool ok = ang <= 1e-12 && p.match_fraction >= 0.9;
      return {ok, "vertex angle defect " + num(ang) + ", match fraction " +
                      num(p.match_fraction)};
    });
  }
}

}  // namespace

std::vector<Check> run_verify_suites(
    const std::optional<RootSystemSpec>& spec, std::uint64_t seed) {
  std::vector<Check> out;
  std::uint64_t salt = 0;
  for (const auto& s : battery(spec))
    family_suite(out, s, seed * 1000003ULL + 17ULL * ++salt);
  return out;
}

}  // namespace isoflow::cli
