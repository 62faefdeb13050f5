// Problem instances for the weighted least-gradient-with-drift energy
//
//   I(u) = sum a |Du + F| h^2 + sum H u h^2 (+ sum_edges a |u - f| h),
//
// under a Neumann (mean-zero) or relaxed Dirichlet boundary condition, with
// the matching dual objective and feasibility residuals.
#pragma once

#include "parea/grid.hpp"

#include <optional>
#include <string>

namespace parea {

class ProblemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class BoundaryKind { Neumann, DirichletRelaxed };

const char* to_string(BoundaryKind k);

struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::Neumann;
  std::optional<BoundaryTrace> f;  // present iff DirichletRelaxed

  static BoundaryCondition neumann() { return {}; }
  static BoundaryCondition dirichlet(BoundaryTrace data) { return {BoundaryKind::DirichletRelaxed, std::move(data)}; }
};

/// Immutable problem data: weight a > 0, drift F, curvature H, boundary condition.
class ProblemSpec {
 public:
  ProblemSpec(GridPtr grid, ScalarField a, VectorField drift, ScalarField curvature, BoundaryCondition bc);

  const GridPtr& grid() const { return grid_; }
  const ScalarField& weight() const { return a_; }
  const VectorField& drift() const { return drift_; }
  const ScalarField& curvature() const { return curvature_; }
  const BoundaryCondition& bc() const { return bc_; }
  bool neumann() const { return bc_.kind == BoundaryKind::Neumann; }
  /// Boundary data f; zero trace for Neumann problems.
  const BoundaryTrace& boundary_data() const { return f_; }
  /// Weight a evaluated at the cell of each boundary edge.
  const Eigen::VectorXd& edge_weight() const { return edge_a_; }

  /// H - mean(H) for Neumann problems, H otherwise.
  ScalarField divergence_target() const;

  double max_weight() const { return a_.values.maxCoeff(); }
  double max_abs_curvature() const { return curvature_.values.cwiseAbs().maxCoeff(); }

  ProblemSpec with_drift(VectorField drift) const;
  ProblemSpec with_boundary(BoundaryCondition bc) const;
  ProblemSpec with_weight(ScalarField a) const;

 private:
  GridPtr grid_;
  ScalarField a_;
  VectorField drift_;
  ScalarField curvature_;
  BoundaryCondition bc_;
  BoundaryTrace f_;
  Eigen::VectorXd edge_a_;
};

struct EnergyReport {
  double tv_term = 0.0;
  double curvature_term = 0.0;
  double boundary_term = 0.0;
  double total = 0.0;
};

/// F = -X* with X* = (y - c_y, -(x - c_x)) at cell centers.
VectorField heisenberg_drift(const GridPtr& grid, const Eigen::Vector2d& center);

/// Throws ProblemError when u is not mean-zero on a Neumann problem.
EnergyReport primal_energy(const ScalarField& u, const ProblemSpec& spec);

/// <F, b> h^2.
double dual_value(const VectorField& b, const ProblemSpec& spec);
/// <F, b> h^2 + sum_edges t f h, the dual objective for a field with
/// explicit boundary flux t.
double dual_value(const VectorField& b, const BoundaryTrace& t, const ProblemSpec& spec);

struct FeasibilityResiduals {
  double r_norm = 0.0;
  double r_div = 0.0;
  double r_trace = 0.0;
};

/// Residuals of b read as a cell field: the boundary flux is normal_trace(b)
/// and the divergence is divergence(b).
FeasibilityResiduals feasibility_residuals(const VectorField& b, const ProblemSpec& spec);

/// Residuals of a dual pair (b, t) with explicit boundary flux t:
///   r_norm  = max(0, max |b| - a, max |t| - a on edges (relaxed Dirichlet)),
///   r_div   = || div(b; t) - Htilde ||_2 h,
///   r_trace = max |t| (Neumann), else 0.
FeasibilityResiduals feasibility_residuals(const VectorField& b, const BoundaryTrace& t, const ProblemSpec& spec);

struct DirichletReduction {
  ProblemSpec reduced;
  double offset = 0.0;
  ScalarField lift;
};

/// Discrete harmonic extension of the boundary data and the shifted problem:
/// F' = F + D lift, f' = f - lift on boundary cells (zero when f is single
/// valued per cell), offset = sum H lift h^2. Then
/// primal_energy(u, spec) = primal_energy(u - lift, reduced) + offset.
DirichletReduction reduce_dirichlet(const ProblemSpec& spec);

enum class Verdict { Guaranteed, Unknown };
const char* to_string(Verdict v);

struct ThresholdReport {
  double c_omega = 0.0;    // lower-bound estimate of the Poincare constant
  double h_norm = 0.0;     // max |H|
  double threshold = 0.0;  // 1 / (1.1 c_omega)
  Verdict verdict = Verdict::Unknown;
};

inline constexpr double kPoincareSafety = 1.1;

ThresholdReport existence_threshold(const ProblemSpec& spec);

}  // namespace parea
