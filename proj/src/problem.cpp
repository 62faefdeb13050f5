#include "parea/problem.hpp"
#include "parea/sparse.hpp"

#include <cmath>

namespace parea {

const char* to_string(BoundaryKind k) {
  return k == BoundaryKind::Neumann ? "neumann" : "dirichlet-relaxed";
}

const char* to_string(Verdict v) { return v == Verdict::Guaranteed ? "Guaranteed" : "Unknown"; }

ProblemSpec::ProblemSpec(GridPtr grid, ScalarField a, VectorField drift, ScalarField curvature, BoundaryCondition bc)
    : grid_(std::move(grid)),
      a_(std::move(a)),
      drift_(std::move(drift)),
      curvature_(std::move(curvature)),
      bc_(std::move(bc)),
      f_(grid_) {
  require_same_grid(grid_, a_);
  require_same_grid(grid_, drift_);
  require_same_grid(grid_, curvature_);
  if (!a_.values.allFinite() || !drift_.values.allFinite() || !curvature_.values.allFinite())
    throw ProblemError("problem data must be finite");
  if ((a_.values.array() <= 0.0).any()) throw ProblemError("weight a must be positive on every cell");
  if (bc_.kind == BoundaryKind::Neumann) {
    if (bc_.f) throw ProblemError("Neumann boundary condition carries no boundary data");
  } else {
    if (!bc_.f) throw ProblemError("relaxed Dirichlet boundary condition needs boundary data f");
    require_same_grid(grid_, *bc_.f);
    if (!bc_.f->values.allFinite()) throw ProblemError("boundary data must be finite");
    f_ = *bc_.f;
  }
  const auto& edges = grid_->boundary_edges();
  edge_a_.resize(grid_->edge_count());
  for (std::size_t e = 0; e < edges.size(); ++e) edge_a_[static_cast<Index>(e)] = a_.values[edges[e].cell];
}

ScalarField ProblemSpec::divergence_target() const {
  return neumann() ? mean_zero_project(curvature_) : curvature_;
}

ProblemSpec ProblemSpec::with_drift(VectorField drift) const {
  return ProblemSpec(grid_, a_, std::move(drift), curvature_, bc_);
}

ProblemSpec ProblemSpec::with_boundary(BoundaryCondition bc) const {
  return ProblemSpec(grid_, a_, drift_, curvature_, std::move(bc));
}

ProblemSpec ProblemSpec::with_weight(ScalarField a) const {
  return ProblemSpec(grid_, std::move(a), drift_, curvature_, bc_);
}

VectorField heisenberg_drift(const GridPtr& grid, const Eigen::Vector2d& center) {
  VectorField f(grid);
  for (Index c = 0; c < grid->cell_count(); ++c) {
    const Eigen::Vector2d p = grid->center(c) - center;
    // X* = (y, -x); F = -X*.
    f.values(c, 0) = -p.y();
    f.values(c, 1) = p.x();
  }
  return f;
}

EnergyReport primal_energy(const ScalarField& u, const ProblemSpec& spec) {
  require_same_grid(spec.grid(), u);
  const GridSpec& g = *spec.grid();
  const double h = g.h();
  if (spec.neumann()) {
    const double scale = 1.0 + u.values.cwiseAbs().maxCoeff();
    if (std::abs(u.values.mean()) > 1e-9 * scale) throw ProblemError("Neumann energy needs a mean-zero u");
  }
  TwoColumns<double> du;
  apply_gradient(g, u.values, du);
  du += spec.drift().values;

  EnergyReport r;
  for (Index c = 0; c < g.cell_count(); ++c) r.tv_term += spec.weight()[c] * du.row(c).norm();
  r.tv_term *= h * h;
  for (Index c = 0; c < g.cell_count(); ++c) r.curvature_term += spec.curvature()[c] * u[c];
  r.curvature_term *= h * h;
  if (!spec.neumann()) {
    const auto& edges = g.boundary_edges();
    const auto& f = spec.boundary_data().values;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const Index k = static_cast<Index>(e);
      r.boundary_term += spec.edge_weight()[k] * std::abs(u[edges[e].cell] - f[k]);
    }
    r.boundary_term *= h;
  }
  r.total = r.tv_term + r.curvature_term + r.boundary_term;
  return r;
}

double dual_value(const VectorField& b, const ProblemSpec& spec) {
  require_same_grid(spec.grid(), b);
  return cell_inner(spec.drift(), b);
}

double dual_value(const VectorField& b, const BoundaryTrace& t, const ProblemSpec& spec) {
  require_same_grid(spec.grid(), t);
  double s = dual_value(b, spec);
  if (!spec.neumann()) s += t.values.dot(spec.boundary_data().values) * spec.grid()->h();
  return s;
}

namespace {

double ball_violation(const VectorField& b, const ProblemSpec& spec) {
  double worst = 0.0;
  for (Index c = 0; c < b.size(); ++c) worst = std::max(worst, b.values.row(c).norm() - spec.weight()[c]);
  return worst;
}

double l2_residual(const ScalarField& div, const ScalarField& target) {
  return (div.values - target.values).norm() * div.grid->h();
}

}  // namespace

FeasibilityResiduals feasibility_residuals(const VectorField& b, const ProblemSpec& spec) {
  require_same_grid(spec.grid(), b);
  FeasibilityResiduals r;
  r.r_norm = ball_violation(b, spec);
  r.r_div = l2_residual(divergence(b), spec.divergence_target());
  if (spec.neumann()) {
    const BoundaryTrace t = normal_trace(b);
    r.r_trace = t.size() > 0 ? t.values.cwiseAbs().maxCoeff() : 0.0;
  }
  return r;
}

FeasibilityResiduals feasibility_residuals(const VectorField& b, const BoundaryTrace& t, const ProblemSpec& spec) {
  require_same_grid(spec.grid(), b);
  require_same_grid(spec.grid(), t);
  FeasibilityResiduals r;
  r.r_norm = ball_violation(b, spec);
  if (!spec.neumann() && t.size() > 0)
    r.r_norm = std::max(r.r_norm, (t.values.cwiseAbs() - spec.edge_weight()).maxCoeff());
  r.r_div = l2_residual(divergence(b, t), spec.divergence_target());
  if (spec.neumann() && t.size() > 0) r.r_trace = t.values.cwiseAbs().maxCoeff();
  return r;
}

DirichletReduction reduce_dirichlet(const ProblemSpec& spec) {
  if (spec.neumann()) throw ProblemError("reduce_dirichlet needs a relaxed Dirichlet problem");
  const GridSpec& g = *spec.grid();
  const Index m = g.cell_count();
  const auto& edges = g.boundary_edges();
  const auto& f = spec.boundary_data().values;

  // Boundary cells take the mean of their edge data; interior cells solve the
  // discrete Laplace equation.
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(m);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    sum[edges[e].cell] += f[static_cast<Index>(e)];
    count[edges[e].cell] += 1;
  }
  std::vector<Index> unknown_of(static_cast<std::size_t>(m), -1);
  Index n_unknown = 0;
  Eigen::VectorXd lift = Eigen::VectorXd::Zero(m);
  for (Index c = 0; c < m; ++c) {
    if (count[c] > 0)
      lift[c] = sum[c] / count[c];
    else
      unknown_of[static_cast<std::size_t>(c)] = n_unknown++;
  }

  if (n_unknown > 0) {
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknown);
    for (Index c = 0; c < m; ++c) {
      const Index row = unknown_of[static_cast<std::size_t>(c)];
      if (row < 0) continue;
      double diag = 0.0;
      for (int ax = 0; ax < 2; ++ax) {
        for (Index nb : {g.forward(c, ax), g.backward(c, ax)}) {
          if (nb < 0) continue;  // interior cells have all four neighbors
          diag += 1.0;
          const Index col = unknown_of[static_cast<std::size_t>(nb)];
          if (col >= 0)
            trip.emplace_back(row, col, -1.0);
          else
            rhs[row] += lift[nb];
        }
      }
      trip.emplace_back(row, row, diag);
    }
    SparseMatrix lap(n_unknown, n_unknown);
    lap.setFromTriplets(trip.begin(), trip.end());
    const Eigen::VectorXd x = solve_spd(lap, rhs, 1e-12, 100000, "reduce_dirichlet");
    for (Index c = 0; c < m; ++c) {
      const Index row = unknown_of[static_cast<std::size_t>(c)];
      if (row >= 0) lift[c] = x[row];
    }
  }

  ScalarField lift_field(spec.grid(), lift);
  VectorField drift = spec.drift();
  drift.values += gradient(lift_field).values;
  BoundaryTrace f_reduced(spec.grid());
  for (std::size_t e = 0; e < edges.size(); ++e)
    f_reduced.values[static_cast<Index>(e)] = f[static_cast<Index>(e)] - lift[edges[e].cell];

  ProblemSpec reduced(spec.grid(), spec.weight(), std::move(drift), spec.curvature(),
                      BoundaryCondition::dirichlet(std::move(f_reduced)));
  const double offset = cell_inner(spec.curvature(), lift_field);
  return DirichletReduction{std::move(reduced), offset, std::move(lift_field)};
}

ThresholdReport existence_threshold(const ProblemSpec& spec) {
  ThresholdReport r;
  r.c_omega = poincare_constant(*spec.grid());
  r.h_norm = spec.max_abs_curvature();
  r.threshold = 1.0 / (kPoincareSafety * r.c_omega);
  r.verdict = r.h_norm < r.threshold ? Verdict::Guaranteed : Verdict::Unknown;
  return r;
}

}  // namespace parea
