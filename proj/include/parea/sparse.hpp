// Assembled sparse forms of the grid operators, for the linear solves
// (harmonic lift, Poisson-type corrections, eigenvector estimates).
#pragma once

#include "parea/grid.hpp"

#include <Eigen/Sparse>

namespace parea {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Forward-difference gradient as a (2M x M) matrix: rows [0, M) are the x
/// components, rows [M, 2M) the y components.
SparseMatrix gradient_matrix(const GridSpec& grid);

/// (E x M) selector: row e has a single 1 at the cell of boundary edge e.
SparseMatrix edge_matrix(const GridSpec& grid);

/// Solves an SPD system A x = rhs by conjugate gradients (Eigen), throwing
/// std::runtime_error if the relative residual stays above tol.
Eigen::VectorXd solve_spd(const SparseMatrix& a, const Eigen::VectorXd& rhs, double tol, int max_iters,
                          const char* what);

/// Solves a singular symmetric system whose null space is the constants and
/// whose right-hand side is mean-zero. Pins the first unknown, then removes
/// the mean of the solution.
Eigen::VectorXd solve_constant_nullspace(const SparseMatrix& a, const Eigen::VectorXd& rhs, double tol,
                                         int max_iters, const char* what);

/// Largest eigenvalue of a symmetric positive semidefinite matrix by Lanczos
/// iteration with full reorthogonalization from a fixed random start. The
/// returned Ritz value never exceeds the true eigenvalue. Throws
/// std::runtime_error if the estimate has not settled to 1e-12 relative
/// within max_steps.
double largest_eigenvalue(const SparseMatrix& sym, int max_steps = 10000);

inline Eigen::VectorXd flatten(const TwoColumns<double>& v) {
  Eigen::VectorXd out(2 * v.rows());
  out.head(v.rows()) = v.col(0);
  out.tail(v.rows()) = v.col(1);
  return out;
}

inline TwoColumns<double> unflatten(const Eigen::VectorXd& v) {
  const Index m = v.size() / 2;
  TwoColumns<double> out(m, 2);
  out.col(0) = v.head(m);
  out.col(1) = v.tail(m);
  return out;
}

}  // namespace parea
