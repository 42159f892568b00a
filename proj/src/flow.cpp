#include "isoflow/flow.hpp"

#include <algorithm>
#include <cmath>

namespace isoflow::flow {

namespace {

// Orthogonal projection of x onto the intersection of the walls of the given
// roots (a linear subspace).  Handles linearly dependent wall sets.
Vec project_to_walls(const weyl::RootSystem& rs, const std::vector<int>& walls,
                     const Vec& x) {
  if (walls.empty()) return x;
  Mat A(x.size(), static_cast<Eigen::Index>(walls.size()));
  for (size_t j = 0; j < walls.size(); ++j) A.col(j) = rs.root(walls[j]);
  Vec c = A.colPivHouseholderQr().solve(x);
  return x - A * c;
}

double sum_mult(const weyl::RootSystem& rs, const std::vector<int>& idx) {
  double s = 0.0;
  for (int i : idx) s += rs.multiplicity(i);
  return s;
}

// Least-squares affine fit y ~ b + c*x; returns {b, c}.
std::pair<double, double> affine_fit(const std::vector<double>& xs,
                                     const std::vector<double>& ys) {
  const size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-300) return {ys.empty() ? 0.0 : sy / n, 0.0};
  double c = (n * sxy - sx * sy) / det;
  double b = (sy - c * sx) / n;
  return {b, c};
}

struct Field {
  const weyl::RootSystem& rs;
  const std::vector<int>& active;
  bool spherical;

  // False when some active gap is >= 0 (the point left the open region where
  // the field is defined with the correct sign).
  bool operator()(const Vec& x, Vec& out) const {
    out = Vec::Zero(x.size());
    for (int i : active) {
      double gap = rs.root(i).dot(x);
      if (gap >= 0.0) return false;
      out -= (rs.multiplicity(i) / gap) * rs.root(i);
    }
    if (spherical) out += rs.n() * x;
    return true;
  }
};

}  // namespace

Vec mcv_euclidean(const weyl::RootSystem& rs, const Vec& x) {
  Vec out = Vec::Zero(x.size());
  for (int i = 0; i < rs.root_count(); ++i) {
    double gap = rs.root(i).dot(x);
    if (gap > 0.0) throw OutsideChamberError(rs.name() + ": point outside chamber");
    if (gap == 0.0) throw WallContactError(rs.name() + ": point on a wall");
    out -= (rs.multiplicity(i) / gap) * rs.root(i);
  }
  return out;
}

Vec mcv_spherical(const weyl::RootSystem& rs, const Vec& x) {
  if (std::abs(x.norm() - 1.0) > 1e-9)
    throw NotOnSphereError(rs.name() + ": spherical field needs |x| = 1");
  return mcv_euclidean(rs, x) + static_cast<double>(rs.n()) * x;
}

Vec mcv_focal(const weyl::RootSystem& rs, const std::vector<int>& vanishing,
              const Vec& x) {
  Vec out = Vec::Zero(x.size());
  for (int i : vanishing) {
    if (std::abs(rs.root(i).dot(x)) > 1e-7 * std::max(1.0, x.norm()))
      throw ConfigError(rs.name() + ": focal point is not on the requested stratum");
  }
  for (int i = 0; i < rs.root_count(); ++i) {
    if (std::find(vanishing.begin(), vanishing.end(), i) != vanishing.end())
      continue;
    double gap = rs.root(i).dot(x);
    if (gap > 0.0) throw OutsideChamberError(rs.name() + ": point outside chamber");
    if (gap == 0.0)
      throw WallContactError(rs.name() + ": point on a wall outside the stratum");
    out -= (rs.multiplicity(i) / gap) * rs.root(i);
  }
  return out;
}

double second_fundamental_bound(const weyl::RootSystem& rs, const Vec& x,
                                const std::vector<int>& indices) {
  double q = 0.0;
  auto add = [&](int i) {
    double gap = rs.root(i).dot(x);
    if (gap == 0.0) throw WallContactError(rs.name() + ": point on a wall");
    q += rs.multiplicity(i) / (gap * gap);
  };
  if (indices.empty())
    for (int i = 0; i < rs.root_count(); ++i) add(i);
  else
    for (int i : indices) add(i);
  return q;
}

Vec Trajectory::at(double t) const {
  const auto& S = samples;
  if (S.empty()) throw ComputeError("empty trajectory");
  if (t <= S.front().t) return S.front().x;
  if (t >= S.back().t) return S.back().x;
  // Find the step interval containing t.
  size_t lo = 0, hi = S.size() - 1;
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    if (S[mid].t <= t)
      lo = mid;
    else
      hi = mid;
  }
  const Sample& s0 = S[lo];
  const Sample& s1 = S[hi];
  double h = s1.t - s0.t;
  if (h <= 0.0) return s0.x;
  double u = (t - s0.t) / h;
  double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
  double h10 = u * (1 - u) * (1 - u);
  double h01 = u * u * (3 - 2 * u);
  double h11 = u * u * (u - 1);
  return h00 * s0.x + (h10 * h) * s0.dx + h01 * s1.x + (h11 * h) * s1.dx;
}

Trajectory integrate(const weyl::RootSystem& rs, const Vec& x0_in,
                     const Variant& variant, const IntegrateOptions& opt) {
  if (static_cast<int>(x0_in.size()) != rs.dim())
    throw ConfigError(rs.name() + ": start has wrong dimension");
  if (!(opt.tol > 0) || !(opt.t_end > 0))
    throw ConfigError("tol and t_end must be positive");

  Trajectory traj;
  traj.variant = variant;
  traj.tol = opt.tol;

  // Active root set and effective multiplicity sum.
  const bool spherical = variant.kind == VariantKind::Spherical;
  std::vector<int> vanishing = variant.vanishing;
  std::sort(vanishing.begin(), vanishing.end());
  vanishing.erase(std::unique(vanishing.begin(), vanishing.end()),
                  vanishing.end());
  if (variant.kind != VariantKind::Focal && !vanishing.empty())
    throw ConfigError("pinned walls are only meaningful for the focal variant");
  for (int i : vanishing)
    if (i < 0 || i >= rs.root_count())
      throw ConfigError("pinned wall index out of range");
  for (int i = 0; i < rs.root_count(); ++i)
    if (!std::binary_search(vanishing.begin(), vanishing.end(), i))
      traj.active_roots.push_back(i);
  if (traj.active_roots.empty())
    throw ConfigError("focal variant with every wall pinned has a zero field");
  traj.n_effective = spherical ? rs.n() : sum_mult(rs, traj.active_roots);

  // Validate and condition the start point.
  Vec x0 = x0_in;
  Vec off = x0 - rs.project_to_span(x0);
  if (off.norm() > 1e-7 * std::max(1.0, x0.norm()))
    throw ConfigError(rs.name() +
                      ": start must lie in the span of the roots "
                      "(trace-zero coordinates for A(k))");
  x0 = rs.project_to_span(x0);
  if (variant.kind == VariantKind::Focal) {
    Vec proj = project_to_walls(rs, vanishing, x0);
    if ((proj - x0).norm() > 1e-7 * std::max(1.0, x0.norm()))
      throw ConfigError(rs.name() + ": focal start is not on the requested stratum");
    x0 = proj;
  }
  if (spherical) {
    if (std::abs(x0.norm() - 1.0) > 1e-9)
      throw NotOnSphereError(rs.name() + ": spherical start needs |x| = 1");
    x0.normalize();
  }
  for (int i : traj.active_roots) {
    double gap = rs.root(i).dot(x0);
    if (gap > 1e-9 * std::max(1.0, x0.norm()))
      throw OutsideChamberError(rs.name() + ": start outside the open chamber");
    if (gap >= -1e-12 * std::max(1.0, x0.norm()))
      throw WallContactError(rs.name() +
                             ": start lies on a wall; pin it with the focal variant");
  }
  traj.x0 = x0;

  const double norm0_sq = x0.squaredNorm();
  const double n_eff = traj.n_effective;
  const double t_scale =
      spherical ? 1.0 / (2.0 * rs.n()) : norm0_sq / (2.0 * n_eff);
  const double h_floor = 1e-10 * t_scale;
  const double atol = opt.tol * 1e-4 * std::max(1.0, x0.norm());
  const double gap_collapse = 1e-3 * x0.norm();

  Field field{rs, traj.active_roots, spherical};

  auto diagnostics = [&](double t, const Vec& x) {
    double nsq = x.squaredNorm();
    double res = spherical ? std::abs(nsq - 1.0)
                           : std::abs(nsq - (norm0_sq - 2.0 * n_eff * t));
    return std::pair<double, double>(rs.min_abs_gap(x, traj.active_roots), res);
  };

  double t = 0.0;
  Vec x = x0;
  Vec k1(x.size());
  if (!field(x, k1))
    throw WallContactError(rs.name() + ": field undefined at start");
  {
    auto [gap, res] = diagnostics(t, x);
    traj.samples.push_back({t, x, k1, x.squaredNorm(), gap, res});
  }

  // Dormand-Prince 5(4) with FSAL.
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                      a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                      a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  double h = opt.h0 > 0 ? opt.h0 : 1e-3 * t_scale;
  bool rejected = false;
  Vec k2(x.size()), k3(x.size()), k4(x.size()), k5(x.size()), k6(x.size()),
      k7(x.size()), xt(x.size()), x_new(x.size());

  for (std::size_t step = 0; step < opt.max_steps; ++step) {
    if (t >= opt.t_end) break;

    // Step caps: stay well inside the region where the field is smooth.
    double gap_min = rs.min_abs_gap(x, traj.active_roots);
    double h_wall =
        opt.wall_cap * gap_min * gap_min / std::max(k1.norm(), 1e-300);
    double h_max = std::min({h_wall, 0.2 * t_scale,
                             std::isfinite(opt.t_end) ? opt.t_end - t
                                                      : 0.2 * t_scale * 1e6});
    h = std::min(h, h_max);
    if (h < h_floor) {
      if (std::isfinite(opt.t_end) && opt.t_end - t < h_floor) break;
      if (gap_min <= gap_collapse) {
        traj.stop = StopReason::Collapse;
        break;
      }
      throw StepUnderflowError(rs.name() +
                               ": step underflow away from every wall (gap " +
                               std::to_string(gap_min) + ")");
    }

    // Stages; any stage outside the open region rejects the step.
    auto stage = [&](double frac, const Vec& combo, Vec& k) {
      (void)frac;
      xt = x + h * combo;
      return field(xt, k);
    };
    bool ok = stage(c2, a21 * k1, k2) &&
              stage(c3, a31 * k1 + a32 * k2, k3) &&
              stage(c4, a41 * k1 + a42 * k2 + a43 * k3, k4) &&
              stage(c5, a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4, k5) &&
              stage(1.0, a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5,
                    k6);
    if (ok) {
      x_new = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      ok = field(x_new, k7);
    }
    if (!ok) {
      h *= 0.5;
      rejected = true;
      continue;
    }

    // Embedded error estimate.
    Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err_norm = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      double sc =
          atol + opt.tol * std::max(std::abs(x(i)), std::abs(x_new(i)));
      double r = err(i) / sc;
      err_norm += r * r;
    }
    err_norm = std::sqrt(err_norm / err.size());
    double factor = 0.9 * std::pow(std::max(err_norm, 1e-12), -0.2);
    factor = std::clamp(factor, 0.2, rejected ? 1.0 : 5.0);
    if (err_norm > 1.0) {
      h *= factor;
      rejected = true;
      continue;
    }

    // Conserved-quantity guard: the squared norm must follow the radial law
    // (euclidean/focal) or stay on the sphere (spherical).
    double t_new = t + h;
    double nsq = x_new.squaredNorm();
    double residual = spherical
                          ? std::abs(nsq - 1.0)
                          : std::abs(nsq - (norm0_sq - 2.0 * n_eff * t_new));
    if (residual > 10.0 * opt.tol * (1.0 + t_new) * std::max(1.0, norm0_sq)) {
      h *= 0.5;
      rejected = true;
      continue;
    }

    // Accept.
    t = t_new;
    x = x_new;
    bool reproject = false;
    if (spherical) {
      x /= x.norm();
      reproject = true;
    } else if (variant.kind == VariantKind::Focal) {
      x = project_to_walls(rs, vanishing, x);
      reproject = true;
    }
    if (reproject) {
      if (!field(x, k1)) {
        traj.stop = StopReason::Collapse;  // projected onto a wall: done
        break;
      }
    } else {
      k1 = k7;  // FSAL
    }
    auto [gap, res] = diagnostics(t, x);
    traj.samples.push_back({t, x, k1, x.squaredNorm(), gap, res});
    rejected = false;
    h *= factor;
  }

  // A loop exit that neither collapsed nor reached t_end (within one minimal
  // step) means the step budget ran out, including via rejections.
  if (traj.stop != StopReason::Collapse && t < opt.t_end &&
      !(std::isfinite(opt.t_end) && opt.t_end - t < h_floor))
    throw ComputeError(rs.name() + ": step budget exhausted at t = " +
                       std::to_string(t));

  if (traj.stop == StopReason::Collapse && opt.want_collapse_report)
    traj.collapse = detect_collapse(rs, traj);
  return traj;
}

CollapseReport detect_collapse(const weyl::RootSystem& rs,
                               const Trajectory& traj) {
  if (traj.stop != StopReason::Collapse)
    throw NotCollapsedError(rs.name() + ": trajectory ran to t_end without collapse");
  const auto& S = traj.samples;
  if (S.size() < 8) throw ComputeError("too few samples to extrapolate collapse");
  const bool radial = traj.variant.kind != VariantKind::Spherical;
  const double scale0 = traj.x0.norm();
  const double n_eff = traj.n_effective;
  const double norm0_sq = traj.x0.squaredNorm();
  const double t_last = S.back().t;

  // --- 1. Seed T from a linear fit of gap^2 against t over the last decade.
  // Near a wall, d(gap^2)/dt -> -2m, so gap^2 is asymptotically linear in t.
  const double g_last = std::max(S.back().min_wall_gap, 1e-300);
  std::vector<double> ts, g2;
  for (size_t i = S.size(); i-- > 0;) {
    if (S[i].min_wall_gap * S[i].min_wall_gap > 100.0 * g_last * g_last) break;
    ts.push_back(S[i].t - t_last);
    g2.push_back(S[i].min_wall_gap * S[i].min_wall_gap);
    if (ts.size() >= 4000) break;
  }
  if (ts.size() < 4) {
    for (size_t i = S.size(), cnt = 0; i-- > 0 && cnt < 16; ++cnt) {
      ts.push_back(S[i].t - t_last);
      g2.push_back(S[i].min_wall_gap * S[i].min_wall_gap);
    }
  }
  auto [b0, c0] = affine_fit(ts, g2);
  double T = (c0 < -1e-300) ? t_last - b0 / c0
                            : t_last + g_last * g_last / (2.0 * n_eff);
  if (!(T > t_last)) T = t_last * (1.0 + 1e-14) + 1e-300;

  // --- 2. Limit point by regression x_j(t) = a_j + b_j sqrt(T-t) + c_j (T-t)
  // over the tail, iterated with the radial law T = (|x0|^2-|a|^2)/(2 n_eff).
  const Eigen::Index d = traj.x0.size();
  Vec a = S.back().x;
  double fit_rms = 0.0;
  for (int iter = 0; iter < 4; ++iter) {
    std::vector<size_t> idx;
    for (size_t i = S.size(); i-- > 0;) {
      double tau = T - S[i].t;
      if (tau <= 0) continue;
      if (tau > 3e-3 * T && idx.size() >= 24) break;
      idx.push_back(i);
      if (idx.size() >= 4000) break;
    }
    if (idx.size() < 6) {
      for (size_t i = S.size(); i-- > 0 && idx.size() < 12;)
        if (T - S[i].t > 0) idx.push_back(i);
    }
    if (idx.size() < 3) break;
    double tau_max = 0.0;
    for (size_t i : idx) tau_max = std::max(tau_max, T - S[i].t);
    Mat M(idx.size(), 3);
    Mat Y(idx.size(), d);
    for (size_t r = 0; r < idx.size(); ++r) {
      double tau = (T - S[idx[r]].t) / tau_max;
      M(r, 0) = 1.0;
      M(r, 1) = std::sqrt(tau);
      M(r, 2) = tau;
      Y.row(r) = S[idx[r]].x.transpose();
    }
    Mat coef = M.colPivHouseholderQr().solve(Y);
    a = coef.row(0).transpose();
    fit_rms = (M * coef - Y).norm() / std::sqrt(static_cast<double>(idx.size()));
    if (radial) {
      double T_new = (norm0_sq - a.squaredNorm()) / (2.0 * n_eff);
      if (T_new > t_last && std::isfinite(T_new)) T = T_new;
    }
  }

  CollapseReport rep;
  if (radial && a.norm() <= 1e-5 * scale0) {
    // Full collapse to the origin: the radial law pins T exactly.
    rep.T = norm0_sq / (2.0 * n_eff);
    rep.x_limit = Vec::Zero(d);
    rep.active_walls = traj.active_roots;
  } else {
    if (!radial) a /= a.norm();
    double wall_tol = std::max(1e-7 * scale0, 30.0 * fit_rms);
    for (int i : traj.active_roots)
      if (std::abs(rs.root(i).dot(a)) <= wall_tol) rep.active_walls.push_back(i);
    if (rep.active_walls.empty()) {
      // Fall back to the single smallest gap.
      int best = traj.active_roots.front();
      for (int i : traj.active_roots)
        if (std::abs(rs.root(i).dot(a)) < std::abs(rs.root(best).dot(a)))
          best = i;
      rep.active_walls.push_back(best);
    }
    // Snap the limit onto its stratum.
    Vec snapped = a;
    {
      std::vector<int> walls = traj.variant.vanishing;
      walls.insert(walls.end(), rep.active_walls.begin(),
                   rep.active_walls.end());
      snapped = project_to_walls(rs, walls, a);
    }
    if (!radial) snapped /= snapped.norm();
    rep.x_limit = snapped;
    rep.T = radial ? (norm0_sq - snapped.squaredNorm()) / (2.0 * n_eff) : T;
  }
  if (!(rep.T > 0)) rep.T = T;
  rep.fiber_dim = 0;
  for (int i : rep.active_walls) rep.fiber_dim += rs.multiplicity(i);
  rep.top_stratum = rep.active_walls.size() == 1;

  // --- 3. Windowed least-squares diagnostics: values against tau = T - t,
  // intercept extrapolated to tau -> 0.
  auto window_fit = [&](auto value) {
    for (double widen : {1.0, 10.0, 100.0}) {
      std::vector<double> taus, vals;
      for (const auto& s : S) {
        double tau = rep.T - s.t;
        if (tau < 1e-5 * rep.T / widen || tau > 1e-2 * rep.T * widen) continue;
        taus.push_back(tau);
        vals.push_back(value(s, tau));
      }
      if (taus.size() >= 8) return affine_fit(taus, vals).first;
    }
    // Degenerate sampling; use the last usable sample.
    for (size_t i = S.size(); i-- > 0;) {
      double tau = rep.T - S[i].t;
      if (tau > 0) return value(S[i], tau);
    }
    return 0.0;
  };
  rep.rate_estimate = window_fit([&](const Sample& s, double tau) {
    return (s.x - rep.x_limit).squaredNorm() / tau;
  });
  rep.typeI_estimate = window_fit([&](const Sample& s, double tau) {
    return second_fundamental_bound(rs, s.x, traj.active_roots) * tau;
  });
  return rep;
}

Trajectory scale_solution(const Trajectory& traj, double r,
                          bool allow_antipodal) {
  if (r == 0.0) throw ConfigError("scale factor must be nonzero");
  if (traj.variant.kind == VariantKind::Spherical)
    throw ConfigError("parabolic rescaling applies to euclidean/focal flows");
  if (r < 0.0 && !allow_antipodal)
    throw ConfigError(
        "negative scale lands in the antipodal chamber; the stored root "
        "orientation no longer matches (pass allow_antipodal to override)");
  Trajectory out = traj;
  out.x0 = r * traj.x0;
  for (auto& s : out.samples) {
    s.t *= r * r;
    s.x *= r;
    s.dx /= r;
    s.norm_sq *= r * r;
    s.min_wall_gap *= std::abs(r);
    s.radial_residual *= r * r;
  }
  if (out.collapse) {
    out.collapse->T *= r * r;
    out.collapse->x_limit *= r;
  }
  return out;
}

}  // namespace isoflow::flow
