// Independent reference values, computed without the code under test where
// possible: dense SVD, closed-form integrals, exhaustive step searches.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "parea/problem.hpp"
#include "parea/sparse.hpp"

#include <Eigen/SVD>

#include <cmath>

using namespace parea;

namespace {

GridPtr strip(int n) {
  std::vector<bool> mask(2 * static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i) mask[static_cast<std::size_t>(i)] = true;
  return make_grid(GridSpec(n, 2, 1.0 / n, mask));
}

ScalarField step_h(const GridPtr& g, double c) {
  ScalarField H(g);
  for (Index k = 0; k < H.size(); ++k) H[k] = g->center(k).x() < 0.5 ? -c : c;
  return H;
}

}  // namespace

TEST_CASE("gradient norm against a dense SVD") {
  for (const GridSpec& spec : {GridSpec::full(16, 16, 1.0), GridSpec::disk(16, 16, 1.0), GridSpec::full(12, 7, 0.5)}) {
    const Eigen::MatrixXd d = Eigen::MatrixXd(gradient_matrix(spec));
    const double exact = Eigen::BDCSVD<Eigen::MatrixXd>(d).singularValues()(0);
    const double est = operator_norm(spec);
    CHECK(est <= exact * (1 + 1e-9));
    CHECK(est == doctest::Approx(exact).epsilon(1e-6));
  }
}

TEST_CASE("gradient norm of a large full square tends to 2 sqrt 2 / h") {
  const double est = operator_norm(GridSpec::full(128, 128, 1.0));
  CHECK(std::abs(est - 2.0 * std::sqrt(2.0)) <= 0.01 * 2.0 * std::sqrt(2.0));
}

TEST_CASE("Poincare constant of the unit interval: exhaustive single-jump search") {
  const int n = 256;
  const GridPtr g = strip(n);
  double best = 0.0;
  for (int k = 1; k < n; ++k) {
    // u = chi_[0,k) - k/n, jump 1 at one face
    const double mean = static_cast<double>(k) / n;
    const double l1 = (k * (1.0 - mean) + (n - k) * mean) * g->h() * g->h();
    const double tv = g->h();  // |Du| = 1/h on one cell, times h^2
    best = std::max(best, l1 / tv);
  }
  CHECK(best == doctest::Approx(0.5));
  const double c = poincare_constant(*g);
  CHECK(c >= best - 1e-12);
  CHECK(c >= 0.5);
  CHECK(c <= 0.55);
}

TEST_CASE("quadrature of |X*| over the unit square") {
  // int_{[-1/2,1/2]^2} |x| dx = (sqrt 2 + asinh 1) / 6
  const double exact = (std::sqrt(2.0) + std::asinh(1.0)) / 6.0;
  CHECK(exact == doctest::Approx(0.3826).epsilon(1e-4));
  const GridPtr g = make_grid(GridSpec::full(256, 256, 1.0 / 256));
  const VectorField F = heisenberg_drift(g, g->lattice_center());
  const double sum = F.values.rowwise().norm().sum() * g->h() * g->h();
  CHECK(sum == doctest::Approx(exact).epsilon(1e-4));
}

TEST_CASE("step family: closed-form energy slope t (2 - c) / 2 per unit strip height") {
  const GridPtr g = strip(256);
  const ScalarField one = ScalarField::constant(g, 1.0);
  for (double c : {0.5, 1.0, 2.0, 3.0}) {
    const ProblemSpec spec(g, one, VectorField(g), step_h(g, c), BoundaryCondition::neumann());
    ScalarField u(g);
    for (Index k = 0; k < u.size(); ++k) u[k] = (g->center(k).x() < 0.5 ? 1.0 : 0.0) - 0.5;
    for (double t : {1.0, 10.0, 1000.0}) {
      ScalarField tu = u;
      tu.values *= t;
      CHECK(primal_energy(tu, spec).total / g->h() == doctest::Approx(t * (2.0 - c) / 2.0));
    }
  }
}

TEST_CASE("step family: the antiderivative of H is an admissible dual field") {
  const GridPtr g = strip(256);
  const double c = 1.5;
  const ProblemSpec spec(g, ScalarField::constant(g, 1.0), VectorField(g), step_h(g, c), BoundaryCondition::neumann());
  // Flux through the +x face of cell i: the integral of H over [0, x_{i+1}].
  VectorField b(g);
  double acc = 0.0;
  for (Index k = 0; k < b.size(); ++k) {
    acc += spec.curvature()[k] * g->h();
    b.values(k, 0) = g->forward(k, 0) >= 0 ? acc : 0.0;
  }
  // Zero flux through the boundary edges.
  const FeasibilityResiduals r = feasibility_residuals(b, BoundaryTrace(g), spec);
  CHECK(r.r_norm <= 0.0);
  CHECK(r.r_div <= 1e-12);
  CHECK(r.r_trace <= 1e-12);
  CHECK(b.values.col(0).cwiseAbs().maxCoeff() == doctest::Approx(c / 2.0));
}
