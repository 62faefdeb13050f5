// Primal-dual hybrid gradient solver for
//
//   min_u max_{|b| <= a, |g| <= a}  <b, Du + F> + <H, u> + (1/h) sum_e g_e (u_e - f_e)
//
// (the g block is present only for relaxed Dirichlet problems). The solver
// returns the primal minimizer u together with the dual field N and its
// boundary flux [N, nu] = -g, and certifies the duality gap with an exactly
// feasible (polished) dual.
#pragma once

#include "parea/problem.hpp"
#include "parea/sparse.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace parea {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The feasible dual set is numerically empty (|H| too large for the weight).
class InfeasibleDual : public SolverError {
 public:
  using SolverError::SolverError;
};

enum class InitKind { Zero, Random, Warm };

struct SolverConfig {
  int max_iters = 50000;
  double gap_tol = 1e-3;  // relative: gap <= gap_tol (1 + |primal|)
  std::optional<double> tau;
  std::optional<double> sigma;
  int check_every = 250;
  std::uint64_t seed = 0;
  InitKind init = InitKind::Zero;
  std::optional<ScalarField> warm_u;
  std::optional<VectorField> warm_b;
  /// Stop and flag divergence once primal < -floor (1 + max|F| max a).
  double divergence_floor = 1e6;
  double overrelaxation = 1.0;
};

struct TracePoint {
  int iter = 0;
  double primal = 0.0;  // energy of the ergodic average
  double dual = 0.0;    // polished dual value of the ergodic average
  double gap = 0.0;     // best certified gap so far
  double r_div = 0.0;   // raw residuals of the ergodic dual, before polish
  double r_trace = 0.0;
};

struct Certificate {
  ScalarField u;
  VectorField N;
  BoundaryTrace flux;  // [N, nu] on each boundary edge
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  FeasibilityResiduals residuals;
  std::vector<TracePoint> trace;
  bool converged = false;
  bool diverging = false;
  bool polished = false;
  int iterations = 0;

  // Last iterate of the run, alongside the reported (best-certified) pair.
  ScalarField u_last;
  VectorField N_last;
  BoundaryTrace flux_last;

  double tau = 0.0;
  double sigma = 0.0;
  double step_norm = 0.0;  // the L used for tau * sigma * L^2 < 1
  double seconds = 0.0;
};

/// Largest singular value of K = [D; E/h] (Dirichlet) or D (Neumann).
double saddle_operator_norm(const ProblemSpec& spec);

Certificate solve(const ProblemSpec& spec, const SolverConfig& cfg = {});

/// Least-norm correction of (N, flux) onto the divergence constraint
/// div(N; flux) = Htilde (flux = 0 for Neumann), followed by a convex
/// combination with a strictly feasible point when the ball constraint is
/// violated. Throws InfeasibleDual if no feasible dual can be produced.
Certificate dual_polish(const Certificate& cert, const ProblemSpec& spec);

/// primal_energy(u).total - dual_value(b). Rejects b outside the ball.
double duality_gap(const ScalarField& u, const VectorField& b, const ProblemSpec& spec);
/// Same for a dual pair with explicit boundary flux.
double duality_gap(const ScalarField& u, const VectorField& b, const BoundaryTrace& t, const ProblemSpec& spec);

/// Cached machinery for repeated polishing on one problem.
class DualPolisher {
 public:
  explicit DualPolisher(const ProblemSpec& spec);

  struct Result {
    VectorField N;
    BoundaryTrace flux;
    double dual_value = 0.0;
    FeasibilityResiduals residuals;
    double mix = 1.0;  // weight kept on the corrected field
  };

  Result polish(const VectorField& N, const BoundaryTrace& flux);

 private:
  Eigen::VectorXd constraint(const Eigen::VectorXd& n_flat, const Eigen::VectorXd& t) const;
  Eigen::VectorXd solve_normal(const Eigen::VectorXd& rhs, Eigen::VectorXd* guess);
  void apply_transpose(const Eigen::VectorXd& y, Eigen::VectorXd& dn, Eigen::VectorXd& dt) const;

  const ProblemSpec* spec_;
  bool neumann_;
  double h_;
  SparseMatrix d_;
  SparseMatrix e_;
  SparseMatrix normal_;  // A A^T (pinned for Neumann)
  Eigen::VectorXd target_;
  Eigen::VectorXd interior_n_;
  Eigen::VectorXd interior_t_;
  double slack_ = 0.0;  // 1 - max(|N0| / a)
  Eigen::VectorXd guess_;
};

}  // namespace parea
