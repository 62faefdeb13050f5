#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "parea/levelset.hpp"
#include "parea/pdhg.hpp"
#include "parea/scenario.hpp"

#include <cmath>

using namespace parea;
using namespace parea::testing;

namespace {

LevelSet block(const GridPtr& g, int i0, int j0, int k) {
  CellMask m(static_cast<std::size_t>(g->cell_count()), false);
  for (Index c = 0; c < g->cell_count(); ++c) {
    const int i = g->cell_i(c), j = g->cell_j(c);
    m[static_cast<std::size_t>(c)] = i >= i0 && i < i0 + k && j >= j0 && j < j0 + k;
  }
  return LevelSet(g, m);
}

// F = 0 disk with affine Dirichlet data: u is smooth and its level sets are
// perimeter minimizers.
ProblemSpec affine_disk(int n) {
  const GridPtr g = make_grid(GridSpec::disk(n, n, 1.0 / n));
  BoundaryTrace f(g);
  for (Index e = 0; e < f.size(); ++e) {
    const BoundaryEdge& be = g->boundary_edges()[static_cast<std::size_t>(e)];
    Eigen::Vector2d m = g->center(be.cell);
    m[axis_of(be.dir)] += 0.5 * sign_of(be.dir) * g->h();
    f.values[e] = m.x() - 0.5;
  }
  return plain(g, VectorField(g), BoundaryCondition::dirichlet(f));
}

}  // namespace

TEST_CASE("psi-perimeter of simple sets") {
  const GridPtr g = make_grid(GridSpec::full(16, 16, 1.0 / 16));
  const ProblemSpec spec = plain(g, VectorField(g));
  CHECK(psi_perimeter(LevelSet::empty(g), spec).total == 0.0);
  for (int k : {1, 2, 5}) {
    const PsiReport r = psi_perimeter(block(g, 4, 4, k), spec);
    CHECK(r.total == doctest::Approx((4 * k - 2 + std::sqrt(2.0)) * g->h()));
    CHECK(r.drift_term == 0.0);
  }
  CellMask right(static_cast<std::size_t>(g->cell_count()));
  for (Index c = 0; c < g->cell_count(); ++c) right[static_cast<std::size_t>(c)] = g->cell_i(c) >= 8;
  const LevelSet E(g, right);
  // one jump per row between columns 7 and 8
  double brute = 0.0;
  for (Index c = 0; c < g->cell_count(); ++c)
    if (g->cell_i(c) == 7) brute += (1.0 / g->h()) * g->h() * g->h();
  CHECK(psi_perimeter(E, spec).total == doctest::Approx(brute));
  CHECK(psi_energy(E.indicator(), spec, full_region(*g)) == doctest::Approx(brute));
}

TEST_CASE("psi-perimeter splits into perimeter, drift and curvature") {
  const GridPtr g = make_grid(GridSpec::full(16, 16, 1.0 / 16));
  ScalarField H = ScalarField::constant(g, 0.7);
  const ProblemSpec spec(g, ScalarField::constant(g, 2.0), heisenberg_drift(g, {0.5, 0.5}), H,
                         BoundaryCondition::neumann());
  const LevelSet E = block(g, 3, 5, 6);
  const PsiReport r = psi_perimeter(E, spec);
  CHECK(r.total == doctest::Approx(r.perimeter_term + r.drift_term + r.curvature_term));
  CHECK(r.curvature_term == doctest::Approx(0.7 * 36 * g->h() * g->h()));
  CHECK(r.perimeter_term == doctest::Approx(2.0 * (4 * 6 - 2 + std::sqrt(2.0)) * g->h()));
  CHECK(r.total == doctest::Approx(psi_energy(E.indicator(), spec, full_region(*g))));
}

TEST_CASE("chi_epsilon truncation") {
  const GridPtr g = make_grid(GridSpec::full(4, 2, 1.0));
  ScalarField u(g);
  u.values << -1.0, 0.0, 0.05, 0.1, 0.2, 1.0, 0.5, 0.1;
  const ScalarField c = chi_epsilon(u, 0.0, 0.1);
  CHECK(c[0] == 0.0);
  CHECK(c[1] == 0.0);
  CHECK(c[2] == doctest::Approx(0.5));
  CHECK(c[3] == doctest::Approx(1.0));
  CHECK(c[5] == 1.0);
  CHECK_THROWS_AS(chi_epsilon(u, 0.0, 0.0), LevelSetError);
}

TEST_CASE("lower semicontinuity along the truncations") {
  const GridPtr g = make_grid(GridSpec::full(16, 16, 1.0 / 16));
  const ProblemSpec spec = plain(g, VectorField(g));
  SUBCASE("indicator data: truncations are exact") {
    const ScalarField u = block(g, 4, 4, 6).indicator();
    const LscReport r = lsc_check(u, 0.5, spec, {1e-1, 1e-2, 1e-3});
    CHECK(r.stabilized);
    CHECK(r.pass);
    for (double v : r.values) CHECK(v == doctest::Approx(r.indicator_value));
  }
  SUBCASE("smooth data") {
    ScalarField u(g);
    for (Index c = 0; c < u.size(); ++c) u[c] = (g->center(c) - Eigen::Vector2d(0.5, 0.5)).norm();
    const LscReport r = lsc_check(u, 0.25, spec, {1e-1, 1e-2, 1e-3});
    CHECK(r.pass);
    CHECK(r.stabilized);
  }
  CHECK_THROWS_AS(lsc_check(ScalarField(g), 0.0, spec, {1e-3, 1e-2}), LevelSetError);
}

TEST_CASE("density sets") {
  const GridPtr g = make_grid(GridSpec::full(12, 12, 1.0 / 12));
  const LevelSet all(g, full_region(*g));
  const CellMask d_all = density_set(all);
  CHECK(std::count(d_all.begin(), d_all.end(), true) == g->cell_count());
  const CellMask db_all = density_boundary(all);
  CHECK(std::count(db_all.begin(), db_all.end(), true) == 0);

  const LevelSet dot = block(g, 5, 5, 1);
  const CellMask d_dot = density_set(dot);
  CHECK(std::count(d_dot.begin(), d_dot.end(), true) == 0);

  const LevelSet b = block(g, 2, 2, 6);
  const CellMask d_b = density_set(b);
  CHECK(std::count(d_b.begin(), d_b.end(), true) == 16);  // the 4 x 4 core
  const CellMask db = density_boundary(b);
  CHECK(std::count(db.begin(), db.end(), true) == 12);  // the core's outer ring
  CHECK_THROWS_AS(density_set(b, 0), LevelSetError);
}

TEST_CASE("level sets of a perimeter-minimizing solution pass the exhaustive check") {
  const ProblemSpec spec = affine_disk(16);
  const Certificate c = solve(spec, {.gap_tol = 1e-7});
  REQUIRE(c.converged);
  const GridPtr& g = spec.grid();
  const std::vector<Window> windows = interior_windows(*g, 3, 3);
  REQUIRE(!windows.empty());
  for (double lambda : {-0.25, 0.0, 0.2}) {
    const LevelSet E = super_level_set(c.u, lambda);
    for (const Window& w : windows) {
      const MinimalityVerdict v = check_minimality_exhaustive(E, spec, w, 1e-7);
      CAPTURE(lambda);
      CHECK(v.pass);
      CHECK(v.competitors == 512);
    }
    CHECK(check_minimality_random(E, spec, 2000, 6, 17, 1e-7).pass);
  }
}

TEST_CASE("a flipped cell is caught") {
  const ProblemSpec spec = affine_disk(16);
  const Certificate c = solve(spec, {.gap_tol = 1e-7});
  const GridPtr& g = spec.grid();
  LevelSet E = super_level_set(c.u, 0.0);
  const Index bad = g->index(8, 4);
  REQUIRE(bad >= 0);
  E.member[static_cast<std::size_t>(bad)] = !E.member[static_cast<std::size_t>(bad)];
  const MinimalityVerdict v = check_minimality_exhaustive(E, spec, {7, 3, 3, 3}, 1e-7);
  CHECK_FALSE(v.pass);
  CHECK(v.margin > 0.0);
  CHECK(std::find(v.best_flip.begin(), v.best_flip.end(), bad) != v.best_flip.end());

  const MinimalityVerdict r = check_minimality_random(E, spec, 1, 1, 0, 1e-7, {{bad}});
  CHECK_FALSE(r.pass);
  CHECK(check_minimality_exhaustive(E, spec, {7, 3, 0, 0}, 1e-7).pass);  // empty window
  CHECK(check_minimality_random(E, spec, 100, 0, 0, 1e-7).pass);        // no flips allowed
  CHECK_THROWS_AS(check_minimality_exhaustive(E, spec, {0, 0, 5, 5}, 1e-7), LevelSetError);
}

namespace {

double coarea_integral(const ScalarField& u, const ProblemSpec& spec, int n) {
  const double lo = u.values.minCoeff(), hi = u.values.maxCoeff();
  double integral = 0.0;
  for (int k = 0; k < n; ++k) {
    const double lambda = lo + (hi - lo) * (k + 0.5) / n;
    integral += psi_perimeter(super_level_set(u, lambda), spec).total * (hi - lo) / n;
  }
  return integral;
}

}  // namespace

TEST_CASE("coarea: perimeters of level sets integrate to the total variation") {
  const GridPtr g = make_grid(GridSpec::full(32, 32, 1.0 / 32));
  const ProblemSpec spec = plain(g, VectorField(g));
  ScalarField u(g);
  // monotone along x: every level set is a half-plane and coarea is exact
  for (Index c = 0; c < u.size(); ++c) u[c] = std::pow(g->center(c).x(), 2);
  CHECK(coarea_integral(u, spec, 4000) == doctest::Approx(total_variation(u)).epsilon(0.02));
  // curved level sets: the isotropic lattice perimeter of a staircase
  // exceeds the total variation, so only the inequality survives
  for (Index c = 0; c < u.size(); ++c)
    u[c] = std::exp(-8.0 * (g->center(c) - Eigen::Vector2d(0.45, 0.55)).squaredNorm());
  CHECK(total_variation(u) <= coarea_integral(u, spec, 4000) * (1 + 1e-3));
}

TEST_CASE("boundary barrier probe") {
  const Scenario s = builtin_scenario("barrier-notch");
  const double h = s.spec.grid()->h();
  SUBCASE("a convex corner holds") {
    const BarrierReport r = barrier_probe(s.spec, {0.0, 0.0}, 3 * h);
    CHECK(r.exhaustive);
    CHECK(r.holds);
    CHECK(r.contact_edges.empty());
    CHECK(r.value <= r.omega_value + 1e-12);
  }
  SUBCASE("the notch is violated") {
    const BarrierReport r = barrier_probe(s.spec, {0.5, 0.75}, 2 * h);
    CHECK_FALSE(r.holds);
    CHECK_FALSE(r.contact_edges.empty());
  }
  SUBCASE("a radius below the rim is vacuous") {
    const BarrierReport r = barrier_probe(s.spec, {0.5, 0.0}, 0.25 * h);
    CHECK(r.free_cells == 0);
    CHECK(r.holds);
  }
  CHECK_THROWS_AS(barrier_probe(s.spec, {0.5, 0.5}, 2 * h), LevelSetError);
  CHECK_THROWS_AS(barrier_probe(s.spec, {0.0, 0.0}, 0.0), LevelSetError);
}
