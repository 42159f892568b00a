#include "isoflow/rootsystem.hpp"
#include "isoflow/types.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace isoflow;
using weyl::Family;
using weyl::RootSystem;
using weyl::RootSystemSpec;

namespace {

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

std::vector<RootSystemSpec> battery() {
  return {
      make(Family::A, 2, 1, 1),  make(Family::A, 3, 2, 2),
      make(Family::B, 2, 1, 1),  make(Family::B, 3, 1, 2),
      make(Family::D, 3, 1, 1),  make(Family::D, 4, 1, 1),
      make(Family::I2, 3, 1, 1), make(Family::I2, 4, 1, 2),
      make(Family::I2, 5, 2, 2), make(Family::I2, 6, 1, 1),
  };
}

}  // namespace

TEST_SUITE("weyl") {

TEST_CASE("spec validation rejects out-of-range parameters") {
  CHECK_THROWS_AS(RootSystem(make(Family::A, 0, 1, 1)), ConfigError);
  CHECK_THROWS_AS(RootSystem(make(Family::A, 13, 1, 1)), ConfigError);
  CHECK_THROWS_AS(RootSystem(make(Family::B, 1, 1, 1)), ConfigError);
  CHECK_THROWS_AS(RootSystem(make(Family::D, 2, 1, 1)), ConfigError);
  CHECK_THROWS_AS(RootSystem(make(Family::I2, 2, 1, 1)), ConfigError);
  CHECK_THROWS_AS(RootSystem(make(Family::I2, 721, 1, 1)), ConfigError);
  // Odd dihedral groups have a single orbit of mirror lines, so a split
  // multiplicity assignment is inconsistent.
  CHECK_THROWS_AS(RootSystem(make(Family::I2, 5, 1, 2)), ConfigError);
  CHECK_THROWS_AS(RootSystem(make(Family::A, 2, 0, 0)), ConfigError);
}

TEST_CASE("root counts, multiplicity sums, unit normals") {
  // Positive-root counts: A(k) has C(k+1,2) coordinate-difference lines,
  // B(k) has k axes plus 2*C(k,2) = k(k-1) difference/sum lines (k^2 total),
  // D(k) drops the axes (k(k-1)), I2(g) has g mirror lines.
  // n = sum of multiplicities over all lines.
  struct Row {
    RootSystemSpec spec;
    int count, n, dim;
  };
  const std::vector<Row> rows = {
      {make(Family::A, 2, 1, 1), 3, 3, 3},
      {make(Family::A, 3, 2, 2), 6, 12, 4},
      {make(Family::B, 2, 1, 2), 4, 2 * 2 + 2 * 1, 2},
      {make(Family::B, 3, 1, 2), 9, 3 * 2 + 6 * 1, 3},
      {make(Family::D, 3, 1, 1), 6, 6, 3},
      {make(Family::D, 4, 1, 1), 12, 12, 4},
      {make(Family::I2, 3, 1, 1), 3, 3, 2},
      {make(Family::I2, 4, 1, 2), 4, 2 * (1 + 2), 2},
      {make(Family::I2, 5, 2, 2), 5, 10, 2},
      {make(Family::I2, 6, 1, 1), 6, 6, 2},
  };
  for (const auto& row : rows) {
    RootSystem rs(row.spec);
    CAPTURE(rs.name());
    CHECK(rs.root_count() == row.count);
    CHECK(rs.n() == row.n);
    CHECK(rs.dim() == row.dim);
    CHECK(rs.rank() == (row.spec.family == Family::I2 ? 2 : row.spec.k));
    int msum = 0;
    for (int i = 0; i < rs.root_count(); ++i) {
      CHECK(rs.root(i).norm() == doctest::Approx(1.0).epsilon(1e-13));
      msum += rs.multiplicity(i);
    }
    CHECK(msum == row.n);
  }
}

TEST_CASE("signs are normalized against the chamber") {
  for (const auto& spec : battery()) {
    RootSystem rs(spec);
    CAPTURE(rs.name());
    const Vec c = rs.chamber_center();
    CHECK(c.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rs.in_open_chamber(c));
    const Vec gaps = rs.signed_gaps(c);
    CHECK(gaps.size() == rs.root_count());
    CHECK(gaps.maxCoeff() < 0.0);
    CHECK(rs.min_abs_gap(c) == doctest::Approx(-gaps.maxCoeff()).epsilon(1e-12));
    CHECK(rs.min_abs_gap(c) == doctest::Approx(rs.center_min_gap()).epsilon(1e-12));
  }
}

TEST_CASE("hand-computed chamber centers") {
  // Equal-gap (max-min) directions, solved by hand from the simple-wall
  // contact equations:
  //   A(2): x2 = 0, x3 = -x1, unit  =>  (-1, 0, 1)/sqrt(2)
  //   A(3): equally spaced coordinates  =>  (-3, -1, 1, 3)/sqrt(20)
  //   B(2): |x2| = (x2 - x1)/sqrt(2)   =>  -(cos(pi/8), sin(pi/8))
  //   B(3): x = -(1+2*sqrt2, 1+sqrt2, 1)/sqrt(13+6*sqrt2)
  //   D(4): x4 = 0, spacing sqrt(2)*gap =>  (-3, -2, -1, 0)/sqrt(14)
  //   I2(g): the wedge bisector (cos(pi/2g), sin(pi/2g))
  const double s2 = std::sqrt(2.0);
  {
    RootSystem rs(make(Family::A, 2, 1, 1));
    Vec e(3);
    e << -1.0 / s2, 0.0, 1.0 / s2;
    CHECK((rs.chamber_center() - e).norm() <= 1e-10);
  }
  {
    RootSystem rs(make(Family::A, 3, 2, 2));
    Vec e(4);
    e << -3, -1, 1, 3;
    e /= std::sqrt(20.0);
    CHECK((rs.chamber_center() - e).norm() <= 1e-10);
  }
  {
    RootSystem rs(make(Family::B, 2, 1, 1));
    Vec e(2);
    e << -std::cos(M_PI / 8), -std::sin(M_PI / 8);
    CHECK((rs.chamber_center() - e).norm() <= 1e-10);
  }
  {
    RootSystem rs(make(Family::B, 3, 1, 2));
    Vec e(3);
    e << -(1 + 2 * s2), -(1 + s2), -1.0;
    e /= std::sqrt(13 + 6 * s2);
    CHECK((rs.chamber_center() - e).norm() <= 1e-10);
  }
  {
    RootSystem rs(make(Family::D, 4, 1, 1));
    Vec e(4);
    e << -3, -2, -1, 0;
    e /= std::sqrt(14.0);
    CHECK((rs.chamber_center() - e).norm() <= 1e-10);
  }
  for (int g : {3, 4, 5, 6, 8}) {
    RootSystem rs(make(Family::I2, g, 1, 1));
    Vec e(2);
    e << std::cos(M_PI / (2.0 * g)), std::sin(M_PI / (2.0 * g));
    CAPTURE(g);
    CHECK((rs.chamber_center() - e).norm() <= 1e-10);
    CHECK(rs.center_min_gap() ==
          doctest::Approx(std::sin(M_PI / (2.0 * g))).epsilon(1e-10));
  }
}

TEST_CASE("strata carry the vanishing set and both multiplicity sums") {
  {
    // A(2): (-2,1,1)/sqrt(6) lies on the single wall x2 = x3.
    RootSystem rs(make(Family::A, 2, 1, 1));
    Vec x(3);
    x << -2, 1, 1;
    x /= std::sqrt(6.0);
    const auto st = rs.stratum_of(x, 1e-9);
    CHECK(st.vanishing.size() == 1);
    CHECK(st.active.size() == 2);
    CHECK(st.fiber_dim == 1);
    CHECK(st.n_sigma == 2);
  }
  {
    // B(2) with (m1,m2) = (1,2): (-1,0) lies on the axis wall only.
    RootSystem rs(make(Family::B, 2, 1, 2));
    Vec x(2);
    x << -1, 0;
    const auto st = rs.stratum_of(x, 1e-9);
    CHECK(st.vanishing.size() == 1);
    CHECK(st.fiber_dim == 2);  // the axis wall carries m2
    CHECK(st.n_sigma == rs.n() - 2);
    const Vec c = rs.chamber_center();
    const auto interior = rs.stratum_of(c, 1e-9);
    CHECK(interior.vanishing.empty());
    CHECK(interior.n_sigma == rs.n());
    const auto origin = rs.stratum_of(Vec::Zero(2), 1e-9);
    CHECK(origin.fiber_dim == rs.n());
    CHECK(origin.n_sigma == 0);
  }
}

TEST_CASE("reflections are isometric involutions preserving the root set") {
  Rng rng(2024);
  for (const auto& spec : battery()) {
    RootSystem rs(spec);
    CAPTURE(rs.name());
    for (int trial = 0; trial < 5; ++trial) {
      Vec x(rs.dim());
      for (int i = 0; i < rs.dim(); ++i) x[i] = rng.normal();
      const int r = static_cast<int>(rng.uniform() * rs.root_count());
      const Vec y = rs.reflect(r, x);
      CHECK((rs.reflect(r, y) - x).norm() <= 1e-12 * (1.0 + x.norm()));
      CHECK(std::abs(y.norm() - x.norm()) <= 1e-12 * (1.0 + x.norm()));
    }
    // A mirror maps every root line onto some root line.
    for (int r = 0; r < rs.root_count(); ++r) {
      CHECK((rs.reflect(r, rs.root(r)) + rs.root(r)).norm() <= 1e-12);
      for (int j = 0; j < rs.root_count(); ++j) {
        const Vec im = rs.reflect(r, rs.root(j));
        double best = 1e9;
        for (int l = 0; l < rs.root_count(); ++l)
          best = std::min({best, (im - rs.root(l)).norm(),
                           (im + rs.root(l)).norm()});
        CHECK(best <= 1e-12);
      }
    }
  }
}

TEST_CASE("dihedral wall conventions") {
  // Wall theta = 0 is cut out by root 0, wall theta = pi/g by root 1; for
  // even g the theta = 0 mirror orbit carries m1 and the adjacent orbit m2.
  for (int g : {3, 4, 5, 6}) {
    auto spec = (g % 2 == 0) ? make(Family::I2, g, 1, 2) : make(Family::I2, g, 1, 1);
    RootSystem rs(spec);
    CAPTURE(g);
    Vec w0(2), w1(2);
    w0 << 1, 0;
    w1 << std::cos(M_PI / g), std::sin(M_PI / g);
    const auto s0 = rs.stratum_of(w0, 1e-9);
    const auto s1 = rs.stratum_of(w1, 1e-9);
    REQUIRE(s0.vanishing.size() == 1);
    REQUIRE(s1.vanishing.size() == 1);
    CHECK(s0.vanishing[0] == 0);
    CHECK(s1.vanishing[0] == 1);
    CHECK(rs.multiplicity(0) == spec.m1);
    CHECK(rs.multiplicity(1) == spec.m2);
  }
}

TEST_CASE("B(2) with multiplicities (a,b) is I2(4) with (b,a)") {
  // Both systems consist of the two coordinate axes and the two diagonals as
  // mirror lines; B(2) puts m2 on the axis normals e_i and m1 on the
  // diagonals, while the dihedral convention labels the theta = 0 orbit m1.
  // The weighted root data coincide, so the fields agree at every point.
  RootSystem b2(make(Family::B, 2, 3, 1));
  RootSystem i2(make(Family::I2, 4, 1, 3));
  CHECK(b2.n() == i2.n());
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x = i2.random_interior_unit(rng);
    CHECK(i2.min_abs_gap(x) == doctest::Approx(b2.min_abs_gap(x)).epsilon(1e-12));
  }
}

TEST_CASE("random interior starts are deterministic unit chamber points") {
  for (const auto& spec : battery()) {
    RootSystem rs(spec);
    CAPTURE(rs.name());
    Rng a(11), b(11);
    for (int trial = 0; trial < 8; ++trial) {
      const Vec x = rs.random_interior_unit(a);
      CHECK(x.norm() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(rs.in_open_chamber(x));
      CHECK((x - rs.random_interior_unit(b)).norm() == 0.0);
    }
  }
}

TEST_CASE("span projection and basis") {
  // A(k) roots span the trace-zero hyperplane; the other families have full
  // span.
  RootSystem a3(make(Family::A, 3, 1, 1));
  CHECK(a3.span_basis().cols() == 3);
  Vec ones = Vec::Ones(4);
  CHECK(a3.project_to_span(ones).norm() <= 1e-12);
  RootSystem b3(make(Family::B, 3, 1, 2));
  CHECK(b3.span_basis().cols() == 3);
  Vec x(3);
  x << 0.3, -1.2, 0.5;
  CHECK((b3.project_to_span(x) - x).norm() <= 1e-12);
}

}  // TEST_SUITE
