#include "isoflow/invariants.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>

#include "isoflow/rank2.hpp"

namespace isoflow::invariants {

namespace {

using weyl::Family;

// Elementary symmetric polynomials e_1..e_count of the given values.
std::vector<double> elementary_symmetric(const std::vector<double>& v,
                                         int count) {
  std::vector<double> e(count + 1, 0.0);
  e[0] = 1.0;
  for (double x : v)
    for (int j = count; j >= 1; --j) e[j] += x * e[j - 1];
  return e;
}

// Real-coefficient monic polynomial roots (ascending coefficients,
// c.back() == 1) via the companion matrix, tightened by two complex Newton
// steps where the derivative allows.
std::vector<std::complex<double>> roots_of_monic(const std::vector<double>& c) {
  const int deg = static_cast<int>(c.size()) - 1;
  std::vector<std::complex<double>> roots;
  if (deg <= 0) return roots;
  if (deg == 1) {
    roots.emplace_back(-c[0], 0.0);
    return roots;
  }
  Mat comp = Mat::Zero(deg, deg);
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -c[i];
  Eigen::EigenSolver<Mat> es(comp, /*computeEigenvectors=*/false);
  roots.resize(deg);
  for (int i = 0; i < deg; ++i) roots[i] = es.eigenvalues()(i);

  auto horner = [&](std::complex<double> z) {
    std::complex<double> p = 0.0, dp = 0.0;
    for (int i = deg; i >= 0; --i) {
      dp = dp * z + p;
      p = p * z + c[static_cast<size_t>(i)];
    }
    return std::pair(p, dp);
  };
  for (auto& z : roots)
    for (int it = 0; it < 2; ++it) {
      auto [p, dp] = horner(z);
      if (std::abs(dp) < 1e-300) break;
      auto step = p / dp;
      if (!std::isfinite(std::abs(step)) || std::abs(step) > 1.0) break;
      z -= step;
    }
  std::sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return roots;
}

// Monic polynomial whose roots have elementary symmetric values e_1..e_deg:
// z^deg - e_1 z^{deg-1} + e_2 z^{deg-2} - ...
std::vector<double> poly_from_esym(const Vec& e, int deg) {
  std::vector<double> c(deg + 1, 0.0);
  c[deg] = 1.0;
  double sgn = -1.0;
  for (int j = 1; j <= deg; ++j) {
    c[deg - j] = sgn * e[j - 1];
    sgn = -sgn;
  }
  return c;
}

// Real parts of the roots, rejecting genuinely complex ones.
std::vector<double> real_roots_or_throw(
    const std::vector<std::complex<double>>& roots, const char* what) {
  double scale = 1.0;
  for (const auto& z : roots) scale = std::max(scale, std::abs(z));
  std::vector<double> out;
  out.reserve(roots.size());
  for (const auto& z : roots) {
    if (std::abs(z.imag()) > 1e-7 * scale)
      throw NotInImageError(std::string(what) +
                            ": complex roots, coordinates leave the image of "
                            "the closed chamber");
    out.push_back(z.real());
  }
  return out;
}

void flag_vanishing(const weyl::RootSystem& rs, RecoveredPoint& rp) {
  const Vec gaps = rs.signed_gaps(rp.x);
  const double tol = 1e-7 * std::max(1.0, rp.x.norm());
  for (int i = 0; i < gaps.size(); ++i)
    if (std::abs(gaps[i]) <= tol) rp.vanishing.push_back(i);
  rp.boundary_contact = !rp.vanishing.empty();
}

// Orthogonal projection of x onto the intersection of the listed walls.
Vec snap_to_walls(const weyl::RootSystem& rs, const Vec& x,
                  const std::vector<int>& walls) {
  if (walls.empty()) return x;
  Mat a(x.size(), static_cast<int>(walls.size()));
  for (int c = 0; c < a.cols(); ++c) a.col(c) = rs.root(walls[c]);
  return x - a * a.colPivHouseholderQr().solve(x);
}

}  // namespace

int invariant_count(const weyl::RootSystem& rs) {
  switch (rs.family()) {
    case Family::A:
      return rs.rank() + 1;
    case Family::B:
    case Family::D:
      return rs.rank();
    case Family::I2:
      return 2;
  }
  throw ConfigError("unknown family");
}

Recursion exact_recursion(const weyl::RootSystem& rs) {
  const auto& sp = rs.spec();
  const int k = sp.k;
  const Rat n = rs.n();
  Recursion rec;
  switch (rs.family()) {
    case Family::A: {
      const Rat m = sp.m1;
      for (int r = 1; r <= k + 1; ++r) {
        OdeRow row;
        if (r == 2) {
          row.constant = n;
        } else if (r >= 3) {
          row.src = r - 3;  // sigma_{r-2}
          row.coeff = m * (k - r + 3) * (k - r + 2) / 2;
        }
        rec.rows.push_back(row);
        rec.names.push_back("sigma" + std::to_string(r));
        rec.degrees.push_back(r);
      }
      break;
    }
    case Family::B: {
      const Rat m1 = sp.m1, m2 = sp.m2;
      for (int j = 1; j <= k; ++j) {
        OdeRow row;
        if (j == 1) {
          row.constant = -2 * n;
        } else {
          row.src = j - 2;  // zeta_{j-1}
          row.coeff = -2 * (k - j + 1) * (m2 + m1 * (k - j));
        }
        rec.rows.push_back(row);
        rec.names.push_back("zeta" + std::to_string(j));
        rec.degrees.push_back(2 * j);
      }
      break;
    }
    case Family::D: {
      const Rat m = sp.m1;
      for (int j = 1; j <= k - 1; ++j) {
        OdeRow row;
        if (j == 1) {
          row.constant = -2 * n;
        } else {
          row.src = j - 2;
          row.coeff = -2 * m * (k - j + 1) * (k - j);
        }
        rec.rows.push_back(row);
        rec.names.push_back("zeta" + std::to_string(j));
        rec.degrees.push_back(2 * j);
      }
      rec.rows.push_back(OdeRow{});  // p is conserved under the chamber flow
      rec.names.push_back("p");
      rec.degrees.push_back(k);
      break;
    }
    case Family::I2: {
      const int g = sp.g;
      OdeRow p1;
      p1.constant = -2 * n;
      rec.rows.push_back(p1);
      rec.names.push_back("P1");
      rec.degrees.push_back(2);
      OdeRow p2;
      if (g == 4) {
        p2.src = 0;
        p2.coeff = -8 * (Rat(sp.m2) - Rat(sp.m1));
      } else if (g % 2 == 1 || (g == 6 && sp.m1 == sp.m2)) {
        // top coordinate conserved: for odd g no invariant of degree g - 2
        // exists, and for g = 6 with a single multiplicity the degree-4
        // component cancels.
      } else {
        throw UnsupportedFamilyError(
            "no triangular recursion for even g outside {4, 6 with equal "
            "multiplicities}");
      }
      rec.rows.push_back(p2);
      rec.names.push_back("P2");
      rec.degrees.push_back(g);
      break;
    }
  }
  return rec;
}

Vec eta_eval(const Recursion& rec, const Vec& y) {
  if (y.size() != static_cast<int>(rec.rows.size()))
    throw ConfigError("coordinate vector has the wrong length");
  Vec out(y.size());
  for (int i = 0; i < y.size(); ++i) {
    const OdeRow& row = rec.rows[i];
    double v = rat_to_double(row.constant);
    if (row.src >= 0) v += rat_to_double(row.coeff) * y[row.src];
    out[i] = v;
  }
  return out;
}

Vec eval_invariants(const weyl::RootSystem& rs, const Vec& x) {
  if (x.size() != rs.dim())
    throw ConfigError("point has the wrong ambient dimension");
  const int cnt = invariant_count(rs);
  Vec y(cnt);
  switch (rs.family()) {
    case Family::A: {
      std::vector<double> v(x.data(), x.data() + x.size());
      auto e = elementary_symmetric(v, cnt);
      for (int j = 1; j <= cnt; ++j) y[j - 1] = e[j];
      break;
    }
    case Family::B: {
      std::vector<double> v(x.size());
      for (int i = 0; i < x.size(); ++i) v[i] = x[i] * x[i];
      auto e = elementary_symmetric(v, cnt);
      for (int j = 1; j <= cnt; ++j) y[j - 1] = e[j];
      break;
    }
    case Family::D: {
      std::vector<double> v(x.size());
      double p = 1.0;
      for (int i = 0; i < x.size(); ++i) {
        v[i] = x[i] * x[i];
        p *= x[i];
      }
      auto e = elementary_symmetric(v, cnt - 1);
      for (int j = 1; j <= cnt - 1; ++j) y[j - 1] = e[j];
      y[cnt - 1] = p;
      break;
    }
    case Family::I2: {
      y[0] = x.squaredNorm();
      std::complex<double> z(x[0], x[1]), zg(1.0, 0.0);
      for (int i = 0; i < rs.spec().g; ++i) zg *= z;
      y[1] = zg.real();
      break;
    }
  }
  return y;
}

RecoveredPoint recover_point(const weyl::RootSystem& rs, const Vec& y) {
  if (y.size() != invariant_count(rs))
    throw ConfigError("coordinate vector has the wrong length");
  for (int i = 0; i < y.size(); ++i)
    if (!std::isfinite(y[i])) throw ConfigError("non-finite coordinate");

  RecoveredPoint rp;
  switch (rs.family()) {
    case Family::A: {
      const int deg = rs.rank() + 1;
      auto roots = roots_of_monic(poly_from_esym(y, deg));
      auto vals = real_roots_or_throw(roots, "A");
      std::sort(vals.begin(), vals.end());
      rp.x = Eigen::Map<Vec>(vals.data(), deg);
      break;
    }
    case Family::B:
    case Family::D: {
      const int k = rs.rank();
      Vec e(k);
      if (rs.family() == Family::B) {
        e = y;
      } else {
        e.head(k - 1) = y.head(k - 1);
        e[k - 1] = y[k - 1] * y[k - 1];  // zeta_k = p^2
      }
      auto roots = roots_of_monic(poly_from_esym(e, k));
      auto w = real_roots_or_throw(roots, rs.family() == Family::B ? "B" : "D");
      double scale = 1.0;
      for (double v : w) scale = std::max(scale, std::abs(v));
      for (double& v : w) {
        if (v < -1e-7 * scale)
          throw NotInImageError(
              "negative squared coordinate, outside the image of the chamber");
        v = std::max(v, 0.0);
      }
      std::sort(w.rbegin(), w.rend());  // largest |x_i| first
      rp.x = Vec(k);
      for (int i = 0; i < k; ++i) rp.x[i] = -std::sqrt(w[i]);
      if (rs.family() == Family::D) {
        // p carries the sign of the last coordinate: the first k-1 entries
        // are negative, so sign(x_k) = sign(p) * (-1)^{k-1}.
        double sgn = (y[k - 1] < 0.0 ? -1.0 : 1.0) * ((k - 1) % 2 ? -1.0 : 1.0);
        rp.x[k - 1] = sgn * std::sqrt(w[k - 1]);
      }
      break;
    }
    case Family::I2: {
      const int g = rs.spec().g;
      const double p1 = y[0], p2 = y[1];
      const double s2 = std::max(std::abs(p2), 1.0);
      if (p1 < -1e-9 * std::pow(s2, 2.0 / g))
        throw NotInImageError("negative squared radius");
      const double r = std::sqrt(std::max(p1, 0.0));
      rp.x = Vec::Zero(2);
      if (r > 0.0) {
        const double rg = std::pow(r, g);
        if (std::abs(p2) > rg * (1.0 + 1e-9))
          throw NotInImageError(
              "angular coordinate exceeds the radius bound |P2| <= |x|^g");
        const double th = std::acos(std::clamp(p2 / rg, -1.0, 1.0)) / g;
        rp.x << r * std::cos(th), r * std::sin(th);
      }
      break;
    }
  }
  flag_vanishing(rs, rp);
  return rp;
}

double InvariantTrajectory::evaluate(int coord, double t) const {
  if (coord < 0 || coord >= static_cast<int>(coords.size()))
    throw ConfigError("coordinate index out of range");
  return coords[coord].eval(t, n);
}

Vec InvariantTrajectory::evaluate_all(double t) const {
  Vec y(static_cast<int>(coords.size()));
  for (int i = 0; i < y.size(); ++i) y[i] = coords[i].eval(t, n);
  return y;
}

InvariantTrajectory exact_trajectory(const weyl::RootSystem& rs, const Vec& x0,
                                     bool spherical) {
  const Recursion rec = exact_recursion(rs);
  const Vec y0 = eval_invariants(rs, x0);
  if (spherical) {
    const double r2 = x0.squaredNorm();
    if (std::abs(r2 - 1.0) > 1e-9)
      throw NotOnSphereError("spherical coordinates need a unit start");
  }

  InvariantTrajectory tr;
  tr.spherical = spherical;
  tr.n = rs.n();
  tr.names = rec.names;
  tr.degrees = rec.degrees;
  tr.coords.resize(rec.rows.size());

  for (size_t r = 0; r < rec.rows.size(); ++r) {
    const OdeRow& row = rec.rows[r];
    const Rat init = rat_from_double(y0[static_cast<int>(r)]);

    // Source term of the linear ODE as a sum of e^{q n t} * poly(t).
    ExpPoly source = ExpPoly::constant(row.constant);
    if (row.src >= 0 && row.coeff != 0)
      for (const auto& [q, poly] : tr.coords[row.src].parts)
        source.add_term(q, poly_scale(poly, row.coeff));

    ExpPoly sol;
    if (!spherical) {
      // y' = source, a polynomial identity in t.
      Poly p;
      if (auto it = source.parts.find(0); it != source.parts.end())
        p = poly_integrate(it->second);
      if (p.empty()) p.assign(1, Rat(0));
      p[0] += init;
      sol.parts[0] = std::move(p);
    } else {
      // y' = s n y + source where s is the polynomial degree of the
      // coordinate.  Every source exponent q < s here, but the resonant case
      // q == s (solved by e^{q n t} * integral) is handled for completeness.
      const int s = rec.degrees[r];
      Rat value_at_zero = 0;
      for (const auto& [q, p] : source.parts) {
        if (q == s) {
          sol.add_term(q, poly_integrate(p));
          continue;
        }
        const Rat a = Rat(q - s) * Rat(tr.n);  // d' + a d = p
        Poly d(p.size(), Rat(0));
        for (size_t j = p.size(); j-- > 0;) {
          Rat v = p[j];
          if (j + 1 < d.size()) v -= Rat(static_cast<int>(j + 1)) * d[j + 1];
          d[j] = v / a;
        }
        if (!d.empty()) value_at_zero += d[0];
        sol.add_term(q, d);
      }
      const Rat c1 = init - value_at_zero;
      if (c1 != 0) sol.add_term(s, Poly{c1});
    }

    // Drop identically-zero parts and trailing zero coefficients.
    for (auto it = sol.parts.begin(); it != sol.parts.end();) {
      Poly& p = it->second;
      while (!p.empty() && p.back() == 0) p.pop_back();
      if (p.empty() && it->first != 0)
        it = sol.parts.erase(it);
      else {
        if (p.empty()) p.assign(1, Rat(0));
        ++it;
      }
    }
    if (sol.parts.empty()) sol.parts[0] = Poly{Rat(0)};
    tr.coords[r] = std::move(sol);
  }
  return tr;
}

ExactCollapse exact_collapse_time(const weyl::RootSystem& rs, const Vec& x0) {
  if (x0.size() != rs.dim())
    throw ConfigError("start has the wrong ambient dimension");
  if (!rs.in_open_chamber(x0))
    throw OutsideChamberError(
        "exact collapse time needs a start strictly inside the chamber");

  ExactCollapse out;
  out.radial_bound = x0.squaredNorm() / (2.0 * rs.n());

  if (rs.family() == Family::I2) {
    const double r0sq = x0.squaredNorm();
    const double th0 = std::atan2(x0[1], x0[0]);
    const auto cf = rank2::make_closed_form(rs, th0);
    out.T = r0sq * cf.T;  // the flow commutes with dilation: t scales by r0^2
    RecoveredPoint lim;
    lim.boundary_contact = true;
    if (cf.limit_wall < 0) {
      lim.x = Vec::Zero(2);
      for (int i = 0; i < rs.root_count(); ++i) lim.vanishing.push_back(i);
    } else {
      const double rl =
          std::sqrt(r0sq) * rank2::radius_at(cf, cf.T);
      const double th =
          cf.limit_wall == 0 ? 0.0 : std::numbers::pi / rs.spec().g;
      lim.x = Vec(2);
      lim.x << rl * std::cos(th), rl * std::sin(th);
      lim.vanishing.push_back(cf.limit_wall);  // wall theta=0 is root 0,
                                               // wall theta=pi/g is root 1
    }
    out.limit = lim;
    out.limit.x = snap_to_walls(rs, out.limit.x, out.limit.vanishing);
    return out;
  }

  const InvariantTrajectory tr = exact_trajectory(rs, x0, false);
  auto interior_at = [&](double t) {
    try {
      return !recover_point(rs, tr.evaluate_all(t)).boundary_contact;
    } catch (const NotInImageError&) {
      return false;
    }
  };

  // First boundary contact happens no later than the radial bound (the path
  // reaches the origin there).  Scan for the first non-interior grid point,
  // then bisect the recoverability predicate.
  const double bound = out.radial_bound;
  const int grid = 4096;
  double lo = 0.0, hi = bound;
  bool bracketed = false;
  for (int i = 1; i <= grid; ++i) {
    const double t = bound * i / grid;
    if (!interior_at(t)) {
      lo = bound * (i - 1) / grid;
      hi = t;
      bracketed = true;
      break;
    }
  }
  if (bracketed) {
    for (int it = 0; it < 200 && hi - lo > 1e-15 * bound; ++it) {
      const double mid = 0.5 * (lo + hi);
      (interior_at(mid) ? lo : hi) = mid;
    }
  } else {
    lo = hi = bound;  // minimal direction: contact exactly at the bound
  }
  out.T = 0.5 * (lo + hi);

  // Equality case of the radial estimate: contact at the radial bound means
  // the whole orbit focuses at the origin, where every wall meets.  Point
  // recovery saturates at its wall resolution (~1e-4 |x0|) there, which
  // keeps T within ~1e-8 of the bound; a genuine one-wall contact with a
  // limit that close to the origin is below that resolution anyway.
  if (bound - out.T <= 1e-7 * bound) {
    out.T = bound;
    out.limit.x = Vec::Zero(rs.dim());
    out.limit.vanishing.clear();
    for (int i = 0; i < rs.root_count(); ++i) out.limit.vanishing.push_back(i);
    out.limit.boundary_contact = true;
    return out;
  }

  try {
    out.limit = recover_point(rs, tr.evaluate_all(hi));
  } catch (const NotInImageError&) {
    out.limit = recover_point(rs, tr.evaluate_all(lo));
  }
  if (!out.limit.boundary_contact) {
    // Within bisection resolution of the wall; flag the nearest one.
    const Vec gaps = rs.signed_gaps(out.limit.x);
    int arg = 0;
    for (int i = 1; i < gaps.size(); ++i)
      if (std::abs(gaps[i]) < std::abs(gaps[arg])) arg = i;
    out.limit.vanishing.push_back(arg);
    out.limit.boundary_contact = true;
  }
  out.limit.x = snap_to_walls(rs, out.limit.x, out.limit.vanishing);
  return out;
}

}  // namespace isoflow::invariants
