// Independent check of the optimal energy: minimizes the smoothed energy
//
//   S_eps(u) = sum a sqrt(|Du + F|^2 + eps^2) h^2 + sum H u h^2
//              (+ sum_edges a sqrt((u - f)^2 + eps^2) h)
//
// by nonlinear conjugate gradients for a decreasing list of eps and
// extrapolates to eps = 0. The stencils are evaluated here directly rather
// than through the grid operators, so the two solvers share only the data.
#pragma once

#include "parea/problem.hpp"

#include <stdexcept>
#include <vector>

namespace parea {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleConfig {
  std::vector<double> epsilons{1e-1, 1e-2, 1e-3};
  double descent_tol = 1e-4;  // on the L2 norm of the (h^2-normalized) gradient
  int max_iters = 200000;
  int restart_every = 50;
};

struct OracleStep {
  double eps = 0.0;
  double value = 0.0;        // S_eps at the computed minimizer
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;    // grad_norm <= descent_tol
  double bracket_lo = 0.0;   // value - eps * W
  double bracket_hi = 0.0;   // value
};

struct OracleReport {
  double value = 0.0;         // extrapolated to eps = 0
  double fit_residual = 0.0;  // worst deviation of the remaining eps from the line
  double bracket_width = 0.0; // eps_min * W, W = sum a h^2 (+ sum_edges a h)
  bool monotone = true;       // values non-decreasing in eps
  std::vector<OracleStep> steps;
  ScalarField u;              // minimizer at the smallest eps
};

/// Upper bound of S_eps(u) - I(u) per unit eps: sum a h^2 (+ sum_edges a h).
double smoothing_width(const ProblemSpec& spec);

/// Smoothed energy and its gradient (with respect to the cell values).
double smoothed_energy(const ProblemSpec& spec, const Eigen::VectorXd& u, double eps, Eigen::VectorXd* grad = nullptr);

/// Throws OracleError on an invalid eps list or when the line search stalls
/// above the descent tolerance.
OracleReport oracle_value(const ProblemSpec& spec, const OracleConfig& cfg = {});

}  // namespace parea
