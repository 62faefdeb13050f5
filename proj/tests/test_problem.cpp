#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "parea/pdhg.hpp"

using namespace parea;
using namespace parea::testing;

TEST_CASE("weak duality: primal energy dominates the dual value of any feasible field") {
  const ProblemSpec spec = heisenberg_disk(16);
  const Certificate c = solve(spec, {.max_iters = 20000, .gap_tol = 1e-4});
  REQUIRE(c.polished);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ScalarField u = random_field(spec.grid(), seed);
    CHECK(primal_energy(u, spec).total >= c.dual_value - 1e-12);
  }
}

TEST_CASE("Neumann energy rejects fields that are not mean-zero") {
  const ProblemSpec spec = step_problem(1.0, 16);
  CHECK_THROWS_AS(primal_energy(ScalarField::constant(spec.grid(), 1.0), spec), ProblemError);
  CHECK(primal_energy(ScalarField(spec.grid()), spec).total == doctest::Approx(0.0));
}

TEST_CASE("Dirichlet reduction preserves the energy") {
  const GridPtr g = make_grid(GridSpec::disk(20, 20, 0.05));
  BoundaryTrace f(g);
  for (Index e = 0; e < f.size(); ++e) {
    const BoundaryEdge& be = g->boundary_edges()[static_cast<std::size_t>(e)];
    Eigen::Vector2d m = g->center(be.cell);
    m[axis_of(be.dir)] += 0.5 * sign_of(be.dir) * g->h();
    f.values[e] = 0.3 * m.x() - m.y() + 0.1;
  }
  ScalarField H(g);
  for (Index c = 0; c < H.size(); ++c) H[c] = g->center(c).y() - 0.5;
  const ProblemSpec spec(g, ScalarField::constant(g, 1.5), heisenberg_drift(g, {0.5, 0.5}), H,
                         BoundaryCondition::dirichlet(f));
  const DirichletReduction r = reduce_dirichlet(spec);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ScalarField u = random_field(g, seed);
    ScalarField w(g);
    w.values = u.values - r.lift.values;
    const double lhs = primal_energy(u, spec).total;
    CHECK(std::abs(lhs - primal_energy(w, r.reduced).total - r.offset) <= 1e-8 * (1 + std::abs(lhs)));
  }
}

TEST_CASE("Heisenberg drift is divergence-free away from the boundary") {
  const GridPtr g = make_grid(GridSpec::full(32, 32, 1.0 / 32));
  const VectorField F = heisenberg_drift(g, {0.5, 0.5});
  const ScalarField d = divergence(F, BoundaryTrace(g));
  for (Index c = 0; c < d.size(); ++c) {
    const int i = g->cell_i(c), j = g->cell_j(c);
    if (i > 0 && j > 0 && i < 31 && j < 31) CHECK(std::abs(d[c]) < 1e-12);
  }
  // X* at the center vanishes; at (0.5 + s, 0.5) it points in -y
  const Eigen::Vector2d p = g->center(g->index(24, 16));
  const Index c = g->index(24, 16);
  CHECK(F.values(c, 0) == doctest::Approx(-(p.y() - 0.5)));
  CHECK(F.values(c, 1) == doctest::Approx(p.x() - 0.5));
}

TEST_CASE("existence threshold verdicts") {
  const ThresholdReport lo = existence_threshold(step_problem(1.0));
  CHECK(lo.c_omega == doctest::Approx(0.5).epsilon(0.05));
  CHECK(lo.threshold == doctest::Approx(1.0 / (kPoincareSafety * lo.c_omega)));
  CHECK(lo.verdict == Verdict::Guaranteed);
  CHECK(existence_threshold(step_problem(3.0)).verdict == Verdict::Unknown);
  const GridPtr g = make_grid(GridSpec::full(8, 8, 1.0 / 8));
  CHECK(existence_threshold(plain(g, VectorField(g))).verdict == Verdict::Guaranteed);
}

TEST_CASE("problem construction validates its inputs") {
  const GridPtr g = make_grid(GridSpec::full(4, 4, 0.25));
  const GridPtr other = make_grid(GridSpec::full(5, 4, 0.25));
  CHECK_THROWS_AS(ProblemSpec(g, ScalarField::constant(g, -1.0), VectorField(g), ScalarField(g),
                              BoundaryCondition::neumann()),
                  ProblemError);
  CHECK_THROWS_AS(ProblemSpec(g, ScalarField::constant(other, 1.0), VectorField(g), ScalarField(g),
                              BoundaryCondition::neumann()),
                  std::invalid_argument);
}
