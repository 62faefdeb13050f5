// Small problem builders shared by the unit tests.
#pragma once

#include "parea/problem.hpp"

#include <random>

namespace parea::testing {

inline GridPtr strip(int n) {
  std::vector<bool> mask(2 * static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i) mask[static_cast<std::size_t>(i)] = true;
  return make_grid(GridSpec(n, 2, 1.0 / n, mask));
}

inline ScalarField step_h(const GridPtr& g, double c) {
  ScalarField H(g);
  for (Index k = 0; k < H.size(); ++k) H[k] = g->center(k).x() < 0.5 ? -c : c;
  return H;
}

inline ProblemSpec step_problem(double c, int n = 256) {
  const GridPtr g = strip(n);
  return ProblemSpec(g, ScalarField::constant(g, 1.0), VectorField(g), step_h(g, c), BoundaryCondition::neumann());
}

inline ProblemSpec plain(const GridPtr& g, const VectorField& drift, const BoundaryCondition& bc = BoundaryCondition::neumann()) {
  return ProblemSpec(g, ScalarField::constant(g, 1.0), drift, ScalarField(g), bc);
}

inline ProblemSpec heisenberg_disk(int n) {
  const GridPtr g = make_grid(GridSpec::disk(n, n, 1.0 / n));
  return plain(g, heisenberg_drift(g, {0.5, 0.5}), BoundaryCondition::dirichlet(BoundaryTrace(g)));
}

inline ScalarField random_field(const GridPtr& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ScalarField u(g);
  for (Index c = 0; c < u.size(); ++c) u[c] = n(rng);
  return u;
}

}  // namespace parea::testing
