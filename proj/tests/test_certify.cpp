#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "parea/certify.hpp"

using namespace parea;
using namespace parea::testing;

TEST_CASE("Heisenberg disk certificate passes every check, and reports rederive") {
  const ProblemSpec spec = heisenberg_disk(16);
  const Certificate c = solve(spec, {.gap_tol = 1e-7});
  REQUIRE(c.converged);
  const std::vector<TheoremReport> reports{
      check_dual_feasibility(c.N, c.flux, spec, 1e-8), check_zero_gap(c.u, c.N, c.flux, spec, 1e-6),
      check_alignment(c.u, c.N, spec), check_boundary_complementarity(c.u, c.flux, spec)};
  for (const TheoremReport& r : reports) {
    CAPTURE(to_string(r.name));
    CHECK(r.pass);
    CHECK(rederive_pass(r) == r.pass);
  }
}

TEST_CASE("a broken certificate fails and rederive agrees") {
  const ProblemSpec spec = heisenberg_disk(16);
  const Certificate c = solve(spec, {.gap_tol = 1e-6});
  VectorField bad = c.N;
  bad.values *= 1.5;
  const TheoremReport f = check_dual_feasibility(bad, c.flux, spec, 1e-8);
  CHECK_FALSE(f.pass);
  CHECK(rederive_pass(f) == f.pass);
  VectorField rot(spec.grid());
  rot.values.col(0) = -c.N.values.col(1);
  rot.values.col(1) = c.N.values.col(0);
  const TheoremReport a = check_alignment(c.u, rot, spec);
  CHECK_FALSE(a.pass);
  CHECK(rederive_pass(a) == a.pass);
}

TEST_CASE("existence threshold check and feasible duals on the step family") {
  CHECK(check_existence_threshold(step_problem(1.0)).pass);
  CHECK_FALSE(check_existence_threshold(step_problem(3.0)).pass);
  CHECK(has_feasible_dual(step_problem(1.5)));
  CHECK(has_feasible_dual(step_problem(1.9)));
  CHECK_FALSE(has_feasible_dual(step_problem(2.2)));
}

TEST_CASE("divergence below the threshold is detected above it only") {
  CHECK(check_divergence_below(step_problem(3.0)).pass);
  CHECK(check_divergence_below(step_problem(2.1)).pass);
  CHECK_FALSE(check_divergence_below(step_problem(1.0)).pass);
}

TEST_CASE("threshold search on the step family lands on 2") {
  const ThresholdSearch s = locate_threshold([](double c) { return step_problem(c); }, 0.5, 4.0, 1e-3);
  CHECK(s.resolved);
  CHECK(s.bounded <= s.unbounded);
  CHECK(s.estimate == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("uniqueness of the direction on a small disk") {
  const TheoremReport r = check_uniqueness_of_direction(heisenberg_disk(16), 3, {.gap_tol = 1e-7});
  CHECK(r.pass);
  CHECK(rederive_pass(r));
}

TEST_CASE("Dirichlet-only checks reject Neumann problems") {
  const ProblemSpec spec = step_problem(1.0, 16);
  const GridPtr& g = spec.grid();
  CHECK_THROWS(check_boundary_complementarity(ScalarField(g), BoundaryTrace(g), spec));
}
