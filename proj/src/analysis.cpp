#include "isoflow/analysis.hpp"

#include "isoflow/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace isoflow::analysis {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Orthonormal basis of the tangent space to the unit sphere at x inside
// span(roots), as columns (dim x (rank-1)).
Mat tangent_basis(const weyl::RootSystem& rs, const Vec& x) {
  const Mat& s = rs.span_basis();
  Mat m = s - x * (x.transpose() * s);  // project the span basis off x
  Eigen::ColPivHouseholderQR<Mat> qr(m);
  Mat q = qr.householderQ() * Mat::Identity(m.rows(), m.cols());
  return q.leftCols(s.cols() - 1);
}

// Spherical field without the unit-norm guard, for stage points of the local
// stepper that drift off the sphere by O(h^2).  Returns false when the point
// has left the open chamber.
bool raw_spherical_field(const weyl::RootSystem& rs, const Vec& z, Vec* out) {
  out->setZero();
  for (int i = 0; i < rs.root_count(); ++i) {
    const double gap = rs.root(i).dot(z);
    if (gap >= 0.0) return false;
    *out -= (rs.multiplicity(i) / gap) * rs.root(i);
  }
  *out += rs.n() * z;
  return true;
}

bool point_in_polygon(const std::vector<std::array<double, 2>>& poly,
                      double px, double py) {
  bool in = false;
  for (size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const double xi = poly[i][0], yi = poly[i][1];
    const double xj = poly[j][0], yj = poly[j][1];
    if (((yi > py) != (yj > py)) &&
        (px < (xj - xi) * (py - yi) / (yj - yi) + xi))
      in = !in;
  }
  return in;
}

}  // namespace

MinimalPoint find_minimal_point(const weyl::RootSystem& rs, const Vec* init,
                                double tol, int max_iter) {
  Vec x = init ? rs.project_to_span(*init).normalized() : rs.chamber_center();
  if (!rs.in_open_chamber(x))
    throw ConfigError("minimal-point search needs an interior initial guess");
  const double n = rs.n();
  const int dim = rs.dim();

  MinimalPoint mp;
  for (int iter = 0;; ++iter) {
    Vec f = flow::mcv_euclidean(rs, x) + n * x;
    Mat b = tangent_basis(rs, x);
    Vec ft = b.transpose() * f;
    mp.iterations = iter;
    if (ft.norm() <= tol * std::max(1.0, n)) {
      mp.x = x;
      mp.residual = f.norm();
      return mp;
    }
    if (iter >= max_iter)
      throw NoConvergenceError(rs.name() +
                               ": minimal-point Newton did not converge");

    Mat j = n * Mat::Identity(dim, dim);
    for (int i = 0; i < rs.root_count(); ++i) {
      const double gap = rs.root(i).dot(x);
      j += (rs.multiplicity(i) / (gap * gap)) * rs.root(i) *
           rs.root(i).transpose();
    }
    const Mat jt = b.transpose() * j * b;  // positive definite: n I + PSD
    const Vec delta = jt.ldlt().solve(-ft);

    double step = 1.0;
    bool moved = false;
    for (int h = 0; h < 60 && !moved; ++h, step *= 0.5) {
      Vec cand = (x + step * (b * delta)).normalized();
      if (rs.in_open_chamber(cand)) {
        x = cand;
        moved = true;
      }
    }
    if (!moved)
      throw NoConvergenceError(rs.name() +
                               ": Newton line search left the chamber");
  }
}

std::string subsystem_type(const weyl::RootSystem& rs,
                           const std::vector<int>& indices) {
  if (indices.empty()) return "none";
  const int cnt = static_cast<int>(indices.size());
  std::vector<int> parent(cnt);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (int i = 0; i < cnt; ++i)
    for (int j = i + 1; j < cnt; ++j)
      if (std::abs(rs.root(indices[i]).dot(rs.root(indices[j]))) > 1e-9)
        parent[find(i)] = find(j);

  std::map<int, std::vector<int>> comps;
  for (int i = 0; i < cnt; ++i) comps[find(i)].push_back(indices[i]);

  std::vector<std::string> labels;
  for (const auto& [key, comp] : comps) {
    const int c = static_cast<int>(comp.size());
    Mat m(rs.dim(), c);
    for (int i = 0; i < c; ++i) m.col(i) = rs.root(comp[i]);
    Eigen::ColPivHouseholderQR<Mat> qr(m);
    qr.setThreshold(1e-9);
    const int r = static_cast<int>(qr.rank());
    std::string label;
    if (r <= 1) {
      label = "A1";
    } else if (r == 2) {
      if (c == 3)
        label = "A2";
      else if (c == 4)
        label = "B2";
      else if (c == 6)
        label = "G2";
      else
        label = "I2(" + std::to_string(c) + ")";
    } else if (c == r * (r + 1) / 2) {
      label = "A" + std::to_string(r);
    } else if (c == r * r) {
      label = "B" + std::to_string(r);
    } else if (c == r * (r - 1)) {
      label = "D" + std::to_string(r);
    } else {
      label = "R" + std::to_string(r) + "(" + std::to_string(c) + ")";
    }
    labels.push_back(label);
  }
  std::sort(labels.begin(), labels.end());
  std::string out = labels[0];
  for (size_t i = 1; i < labels.size(); ++i) out += "x" + labels[i];
  return out;
}

SingularityClass classify_singularity(const weyl::RootSystem& rs,
                                      const flow::CollapseReport& report) {
  SingularityClass sc;
  sc.active_walls = report.active_walls;
  sc.fiber_dim = report.fiber_dim;
  sc.top_stratum = report.top_stratum;
  sc.type_one = report.top_stratum;
  sc.fiber_type = subsystem_type(rs, report.active_walls);
  sc.rate_over_2m = report.fiber_dim > 0
                        ? report.rate_estimate / (2.0 * report.fiber_dim)
                        : 0.0;
  sc.typeI_estimate = report.typeI_estimate;
  return sc;
}

SeparationReport separation_check(const weyl::RootSystem& rs,
                                  const std::vector<Vec>& starts,
                                  bool spherical, double tol) {
  if (starts.size() < 2)
    throw ConfigError("separation check needs at least two starts");
  const double r0 = starts[0].norm();
  for (const Vec& s : starts)
    if (std::abs(s.norm() - r0) > 1e-9 * std::max(1.0, r0))
      throw ConfigError("separation starts must lie on a common sphere");

  flow::IntegrateOptions opt;
  opt.tol = tol;
  if (spherical) opt.t_end = 80.0 / rs.n();  // bound stationary starts
  const flow::Variant variant =
      spherical ? flow::Variant::spherical() : flow::Variant::euclidean();

  std::vector<flow::Trajectory> trajs;
  trajs.reserve(starts.size());
  for (const Vec& s : starts) trajs.push_back(flow::integrate(rs, s, variant, opt));

  SeparationReport rep;
  rep.spherical = spherical;
  double t_min = std::numeric_limits<double>::infinity();
  double t_collapse_min = std::numeric_limits<double>::infinity();
  for (const auto& tr : trajs) {
    t_min = std::min(t_min, tr.t_back());
    t_collapse_min = std::min(
        t_collapse_min, tr.collapse ? tr.collapse->T : tr.t_back());
  }
  rep.window_end = spherical ? 0.5 * t_collapse_min : 0.95 * t_min;

  const int grid = spherical ? 200 : 400;
  for (size_t a = 0; a + 1 < trajs.size(); ++a)
    for (size_t b = a + 1; b < trajs.size(); ++b) {
      SeparationPair pr;
      pr.a = static_cast<int>(a);
      pr.b = static_cast<int>(b);
      const double d0 = (starts[a] - starts[b]).norm();
      if (d0 <= 1e-14 * std::max(1.0, r0)) {
        // Identical starts: zero separation forever, vacuously monotone.
        pr.min_increment = 0.0;
        pr.min_log_slope = std::numeric_limits<double>::infinity();
        pr.limit_separation = 0.0;
        rep.pairs.push_back(pr);
        continue;
      }
      double prev_d2 = 0.0;
      double min_inc = std::numeric_limits<double>::infinity();
      double min_slope = std::numeric_limits<double>::infinity();
      for (int i = 0; i <= grid; ++i) {
        const double t = rep.window_end * i / grid;
        const double d2 = (trajs[a].at(t) - trajs[b].at(t)).squaredNorm();
        if (i > 0) {
          const double dt = rep.window_end / grid;
          min_inc = std::min(min_inc, d2 - prev_d2);
          if (prev_d2 > 0.0 && d2 > 0.0)
            min_slope =
                std::min(min_slope, (std::log(d2) - std::log(prev_d2)) / dt);
        }
        prev_d2 = d2;
      }
      pr.min_increment = min_inc;
      pr.min_log_slope = min_slope;
      if (trajs[a].collapse && trajs[b].collapse)
        pr.limit_separation =
            (trajs[a].collapse->x_limit - trajs[b].collapse->x_limit).norm();
      else
        pr.limit_separation = std::numeric_limits<double>::quiet_NaN();
      rep.pairs.push_back(pr);
    }
  return rep;
}

CorrespondenceResult correspondence_check(const weyl::RootSystem& rs,
                                          const Vec& x0, double tol) {
  if (std::abs(x0.norm() - 1.0) > 1e-9)
    throw NotOnSphereError("correspondence check needs a unit start");
  const double n = rs.n();

  flow::IntegrateOptions opt;
  opt.tol = tol;
  const flow::Trajectory euc =
      flow::integrate(rs, x0, flow::Variant::euclidean(), opt);
  if (!euc.collapse)
    throw ComputeError("euclidean flow did not reach collapse");

  flow::IntegrateOptions sopt;
  sopt.tol = tol;
  sopt.t_end = 80.0 / n;  // cap for (near-)stationary starts
  const flow::Trajectory sph =
      flow::integrate(rs, x0, flow::Variant::spherical(), sopt);

  CorrespondenceResult out;
  out.T_euclidean = euc.collapse->T;
  out.T_spherical = sph.collapse
                        ? sph.collapse->T
                        : std::numeric_limits<double>::infinity();
  if (sph.collapse)
    out.time_residual = std::abs(out.T_spherical +
                                 std::log1p(-2.0 * n * out.T_euclidean) /
                                     (2.0 * n));
  else
    out.time_residual = std::numeric_limits<double>::quiet_NaN();

  const int grid = 300;
  const double t_hi = 0.9 * out.T_euclidean;
  for (int i = 0; i <= grid; ++i) {
    const double t = t_hi * i / grid;
    const double u = 1.0 - 2.0 * n * t;
    const double s = -std::log1p(-2.0 * n * t) / (2.0 * n);
    if (s > sph.t_back()) break;
    const Vec mapped = std::sqrt(u) * sph.at(s);
    out.max_deviation =
        std::max(out.max_deviation, (mapped - euc.at(t)).norm());
  }
  return out;
}

namespace {

// Backward spherical orbit from q toward the (backward-attracting) minimal
// point; samples of the forward separatrix in reverse.
std::vector<Vec> shoot_backward(const weyl::RootSystem& rs, const Vec& q,
                                const Vec& p0) {
  std::vector<Vec> pts{q};
  Vec z = q;
  const double n = rs.n();
  const double t_max = 400.0 / n;
  double t = 0.0;
  Vec k1(z.size()), k2(z.size()), k3(z.size()), k4(z.size());
  auto field = [&](const Vec& y, Vec* out) {
    if (!raw_spherical_field(rs, y, out)) return false;
    *out = -*out;
    return true;
  };
  int since_record = 0;
  while ((z - p0).norm() > 1e-5) {
    if (t > t_max)
      throw NoConvergenceError(
          "separatrix shot did not reach the minimal point");
    if (!field(z, &k1))
      throw ComputeError("separatrix shot left the chamber");
    const double gap = rs.min_abs_gap(z);
    double h = std::min(0.1 * gap / std::max(k1.norm(), 1e-300), 0.02 / n);
    bool ok = true;
    ok = ok && field(z + 0.5 * h * k1, &k2);
    ok = ok && field(z + 0.5 * h * k2, &k3);
    ok = ok && field(z + h * k3, &k4);
    if (!ok) {  // stage left the chamber; retreat
      h *= 0.25;
      ok = field(z + 0.5 * h * k1, &k2) && field(z + 0.5 * h * k2, &k3) &&
           field(z + h * k3, &k4);
      if (!ok) throw ComputeError("separatrix shot left the chamber");
    }
    z = (z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).normalized();
    t += h;
    if (++since_record >= 4 || (z - p0).norm() <= 1e-5) {
      pts.push_back(z);
      since_record = 0;
    }
  }
  pts.push_back(p0);
  return pts;
}

}  // namespace

A3Portrait a3_portrait(const weyl::RootSystem& rs, int n_starts,
                       std::uint64_t seed) {
  if (rs.family() != weyl::Family::A || rs.rank() != 3)
    throw ConfigError("the stratified portrait is defined for A(3)");
  if (n_starts < 1) throw ConfigError("need at least one start");

  A3Portrait p;
  const double s12 = std::sqrt(12.0);
  p.vertices[0] = (Vec(4) << -3, 1, 1, 1).finished() / s12;   // A2 on {2,3,4}
  p.vertices[1] = (Vec(4) << -1, -1, -1, 3).finished() / s12;  // A2 on {1,2,3}
  p.vertices[2] = (Vec(4) << -1, -1, 1, 1).finished() / 2.0;   // A1 x A1
  // Edge opposite vertex i; positive roots are the pairs (i<j) in
  // lexicographic order, so x1=x2 is root 0, x2=x3 root 3, x3=x4 root 5.
  p.edge_walls = {0, 5, 3};

  // Interior angles between the great-circle edges at each vertex.
  for (int i = 0; i < 3; ++i) {
    const Vec& v = p.vertices[i];
    const Vec& a = p.vertices[(i + 1) % 3];
    const Vec& b = p.vertices[(i + 2) % 3];
    const Vec ta = (a - a.dot(v) * v).normalized();
    const Vec tb = (b - b.dot(v) * v).normalized();
    p.angles[i] = std::acos(std::clamp(ta.dot(tb), -1.0, 1.0));
  }

  p.p0 = find_minimal_point(rs).x;

  // Cone-barycentric planar chart: the chamber cone is spanned by the three
  // vertex rays, so solving V c = x and normalizing c to sum 1 maps the
  // spherical triangle homeomorphically onto a planar one with straight
  // edges.
  Mat v(4, 3);
  for (int i = 0; i < 3; ++i) v.col(i) = p.vertices[i];
  Eigen::ColPivHouseholderQR<Mat> vqr(v);
  const std::array<std::array<double, 2>, 3> corners = {
      {{0.0, 0.0}, {1.0, 0.0}, {0.5, 0.75}}};
  p.vertices_planar = corners;
  auto to_planar = [&](const Vec& x) -> std::array<double, 2> {
    Vec c = vqr.solve(x);
    const double sum = c.sum();
    c /= sum;
    return {c[0] * corners[0][0] + c[1] * corners[1][0] + c[2] * corners[2][0],
            c[0] * corners[0][1] + c[1] * corners[1][1] + c[2] * corners[2][1]};
  };
  p.p0_planar = to_planar(p.p0);

  // Separatrices: backward shots from just inside each vertex.
  for (int i = 0; i < 3; ++i) {
    const Vec& pi = p.vertices[i];
    const Vec dir = (p.p0 - p.p0.dot(pi) * pi).normalized();
    const Vec q = (pi + 1e-4 * dir).normalized();
    std::vector<Vec> shot = shoot_backward(rs, q, p.p0);
    shot.insert(shot.begin(), pi);
    p.separatrices[i] = std::move(shot);
    p.separatrices_planar[i].reserve(p.separatrices[i].size());
    for (const Vec& z : p.separatrices[i])
      p.separatrices_planar[i].push_back(to_planar(z));
  }

  // Region D_r is bounded by the separatrices to the two other vertices and
  // the edge between them; its starts flow to that edge's wall.
  std::array<std::vector<std::array<double, 2>>, 3> regions;
  for (int r = 0; r < 3; ++r) {
    const int j = (r + 1) % 3, k = (r + 2) % 3;
    std::vector<std::array<double, 2>>& poly = regions[r];
    poly = p.separatrices_planar[j];  // p_j -> p0
    poly.insert(poly.end(), p.separatrices_planar[k].rbegin(),
                p.separatrices_planar[k].rend());  // p0 -> p_k
    // closing straight segment p_k -> p_j is implicit in the polygon
  }

  // Sampling and classification are sequential (one RNG stream); the
  // integrations are independent and fan out over the thread budget.
  Rng rng(seed);
  p.starts.resize(n_starts);
  for (int s = 0; s < n_starts; ++s) {
    A3Portrait::Start& st = p.starts[s];
    // Dirichlet(1,1,1) over the cone coordinates, rejecting near-boundary
    // starts that the integrator would refuse.
    for (int attempt = 0; attempt < 10000; ++attempt) {
      Vec c(3);
      for (int i = 0; i < 3; ++i) c[i] = -std::log(1.0 - rng.uniform());
      c /= c.sum();
      Vec x = (v * c).normalized();
      if (rs.min_abs_gap(x) > 1e-4) {
        st.x = x;
        break;
      }
    }
    if (st.x.size() == 0)
      throw NoConvergenceError("could not sample an interior start");
    st.planar = to_planar(st.x);
    st.region = 0;
    for (int r = 0; r < 3; ++r)
      if (point_in_polygon(regions[r], st.planar[0], st.planar[1])) {
        st.region = r + 1;
        break;
      }
    st.predicted_wall = st.region ? p.edge_walls[st.region - 1] : -1;
  }

  parallel_for(n_starts, [&](int s) {
    A3Portrait::Start& st = p.starts[s];
    try {
      const flow::Trajectory tr =
          flow::integrate(rs, st.x, flow::Variant::spherical(), {});
      if (tr.collapse) {
        st.T = tr.collapse->T;
        const auto& walls = tr.collapse->active_walls;
        if (!walls.empty()) st.observed_wall = walls.front();
        st.match = st.predicted_wall >= 0 &&
                   std::find(walls.begin(), walls.end(), st.predicted_wall) !=
                       walls.end();
      }
    } catch (const ComputeError&) {
      // leave unmatched; counted against the match fraction
    }
  });

  int matches = 0;
  for (const auto& st : p.starts)
    if (st.match) ++matches;
  p.match_fraction = n_starts > 0 ? double(matches) / n_starts : 0.0;
  return p;
}

}  // namespace isoflow::analysis
