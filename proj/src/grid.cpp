#include "parea/grid.hpp"
#include "parea/sparse.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <deque>
#include <numeric>
#include <random>
#include <stdexcept>

namespace parea {

const char* to_string(Direction d) {
  switch (d) {
    case Direction::PosX: return "+x";
    case Direction::NegX: return "-x";
    case Direction::PosY: return "+y";
    case Direction::NegY: return "-y";
  }
  return "?";
}

GridSpec::GridSpec(int nx, int ny, double h, std::vector<bool> mask)
    : nx_(nx), ny_(ny), h_(h), mask_(std::move(mask)) {
  if (nx < 2 || ny < 2) throw GridError("grid needs nx, ny >= 2");
  if (!(h > 0.0) || !std::isfinite(h)) throw GridError("mesh width must be positive");
  if (mask_.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))
    throw GridError("mask length " + std::to_string(mask_.size()) + " does not equal nx*ny = " +
                    std::to_string(nx * ny));

  index_.assign(mask_.size(), -1);
  for (int j = 0; j < ny_; ++j) {
    for (int i = 0; i < nx_; ++i) {
      if (!mask_[lattice(i, j)]) continue;
      index_[lattice(i, j)] = static_cast<Index>(cells_.size());
      cells_.push_back({i, j});
    }
  }
  if (cells_.empty()) throw GridError("mask has no cells");

  fwd_.resize(cells_.size());
  bwd_.resize(cells_.size());
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto [i, j] = cells_[c];
    fwd_[c] = {index(i + 1, j), index(i, j + 1)};
    bwd_[c] = {index(i - 1, j), index(i, j - 1)};
  }

  // 4-connectivity.
  std::vector<bool> seen(cells_.size(), false);
  std::deque<Index> queue{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const Index c = queue.front();
    queue.pop_front();
    for (int ax = 0; ax < 2; ++ax) {
      for (Index n : {fwd_[c][ax], bwd_[c][ax]}) {
        if (n >= 0 && !seen[n]) {
          seen[n] = true;
          ++reached;
          queue.push_back(n);
        }
      }
    }
  }
  if (reached != cells_.size()) throw GridError("mask is not 4-connected");

  edges_ = derive_boundary_edges();
}

std::vector<BoundaryEdge> GridSpec::derive_boundary_edges() const {
  std::vector<BoundaryEdge> edges;
  for (Index c = 0; c < cell_count(); ++c) {
    const auto [i, j] = cells_[c];
    if (!masked(i + 1, j)) edges.push_back({c, Direction::PosX});
    if (!masked(i - 1, j)) edges.push_back({c, Direction::NegX});
    if (!masked(i, j + 1)) edges.push_back({c, Direction::PosY});
    if (!masked(i, j - 1)) edges.push_back({c, Direction::NegY});
  }
  return edges;
}

GridSpec GridSpec::full(int nx, int ny, double h) {
  return GridSpec(nx, ny, h, std::vector<bool>(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), true));
}

GridSpec GridSpec::disk(int nx, int ny, double h) {
  std::vector<bool> mask(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), false);
  const double cx = 0.5 * nx, cy = 0.5 * ny, r = 0.5 * std::min(nx, ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double dx = i + 0.5 - cx, dy = j + 0.5 - cy;
      mask[static_cast<std::size_t>(j) * nx + i] = dx * dx + dy * dy < r * r;
    }
  return GridSpec(nx, ny, h, std::move(mask));
}

// ---------------------------------------------------------------------------

SparseMatrix gradient_matrix(const GridSpec& g) {
  const Index m = g.cell_count();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(4 * m));
  const double inv_h = 1.0 / g.h();
  for (Index c = 0; c < m; ++c) {
    for (int ax = 0; ax < 2; ++ax) {
      const Index f = g.forward(c, ax);
      if (f < 0) continue;
      trip.emplace_back(ax * m + c, f, inv_h);
      trip.emplace_back(ax * m + c, c, -inv_h);
    }
  }
  SparseMatrix d(2 * m, m);
  d.setFromTriplets(trip.begin(), trip.end());
  return d;
}

SparseMatrix edge_matrix(const GridSpec& g) {
  const auto& edges = g.boundary_edges();
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t e = 0; e < edges.size(); ++e) trip.emplace_back(static_cast<Index>(e), edges[e].cell, 1.0);
  SparseMatrix s(g.edge_count(), g.cell_count());
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

Eigen::VectorXd solve_spd(const SparseMatrix& a, const Eigen::VectorXd& rhs, double tol, int max_iters,
                          const char* what) {
  if (rhs.squaredNorm() == 0.0) return Eigen::VectorXd::Zero(rhs.size());
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(max_iters);
  cg.compute(a);
  Eigen::VectorXd x = cg.solve(rhs);
  const double rel = (a * x - rhs).norm() / rhs.norm();
  if (cg.info() != Eigen::Success && rel > 10 * tol)
    throw std::runtime_error(std::string(what) + ": conjugate gradients did not converge (relative residual " +
                             std::to_string(rel) + ")");
  return x;
}

Eigen::VectorXd solve_constant_nullspace(const SparseMatrix& a, const Eigen::VectorXd& rhs, double tol,
                                         int max_iters, const char* what) {
  const Index n = a.rows();
  if (n == 1) return Eigen::VectorXd::Zero(1);
  // Drop unknown 0 (fixed at zero); the reduced matrix is SPD for a connected graph.
  SparseMatrix reduced = a.bottomRightCorner(n - 1, n - 1);
  Eigen::VectorXd sub = solve_spd(reduced, rhs.tail(n - 1), tol, max_iters, what);
  Eigen::VectorXd x(n);
  x[0] = 0.0;
  x.tail(n - 1) = sub;
  x.array() -= x.mean();
  return x;
}

Eigen::VectorXd solve_neumann_laplacian(const GridSpec& grid, const Eigen::VectorXd& rhs, double tol,
                                        int max_iters) {
  const SparseMatrix d = gradient_matrix(grid);
  const SparseMatrix lap = SparseMatrix(d.transpose()) * d;
  Eigen::VectorXd centered = rhs.array() - rhs.mean();
  return solve_constant_nullspace(lap, centered, tol, max_iters, "neumann laplacian");
}

// ---------------------------------------------------------------------------

double largest_eigenvalue(const SparseMatrix& sym, int max_steps) {
  const Index n = sym.rows();
  if (n == 0) return 0.0;
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd q(n);
  for (Index i = 0; i < n; ++i) q[i] = dist(rng);
  q.normalize();

  const int steps = static_cast<int>(std::min<Index>(n, max_steps));
  std::vector<Eigen::VectorXd> basis;
  std::vector<double> alpha, beta;
  double ritz = 0.0, previous = -1.0;
  int settled = 0;
  for (int k = 0; k < steps; ++k) {
    basis.push_back(q);
    Eigen::VectorXd w = sym * q;
    alpha.push_back(q.dot(w));
    for (const auto& v : basis) w -= v.dot(w) * v;  // full reorthogonalization
    for (const auto& v : basis) w -= v.dot(w) * v;
    const double b = w.norm();

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k + 1, k + 1);
    for (int i = 0; i <= k; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i < k) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    ritz = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(t, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    if (b <= 1e-14 * std::max(1.0, std::abs(ritz))) return ritz;  // invariant subspace
    settled = std::abs(ritz - previous) <= 1e-12 * ritz ? settled + 1 : 0;
    if (settled >= 5) return ritz;
    previous = ritz;
    beta.push_back(b);
    q = w / b;
  }
  if (steps == n) return ritz;
  throw std::runtime_error("largest_eigenvalue: Lanczos estimate did not settle");
}

double operator_norm(const GridSpec& grid) {
  const SparseMatrix d = gradient_matrix(grid);
  const SparseMatrix lap = SparseMatrix(d.transpose()) * d;
  try {
    return std::sqrt(std::max(0.0, largest_eigenvalue(lap, 10000)));
  } catch (const std::runtime_error&) {
    throw std::runtime_error("operator_norm: iteration did not converge in 10^4 sweeps");
  }
}

double total_variation(const ScalarField& u) {
  const double h = u.grid->h();
  return pointwise_norm(gradient(u).values).sum() * h * h;
}

double l1_norm(const ScalarField& u) {
  const double h = u.grid->h();
  return u.values.cwiseAbs().sum() * h * h;
}

namespace {

// Best ratio over the super-level-set sweep of `order` (cells sorted by a
// score): the k highest-ranked cells form E, u = chi_E - |E|/|Omega|.
// The TV of chi_E is updated incrementally as cells join E.
double sweep_ratio(const GridSpec& grid, const std::vector<Index>& order) {
  const Index m = grid.cell_count();
  const double h = grid.h();
  Eigen::VectorXd chi = Eigen::VectorXd::Zero(m);
  // Per-cell gradient norm contributions of chi_E.
  auto cell_norm = [&](Index c) {
    double s = 0.0;
    for (int ax = 0; ax < 2; ++ax) {
      const Index f = grid.forward(c, ax);
      if (f >= 0) {
        const double d = chi[f] - chi[c];
        s += d * d;
      }
    }
    return std::sqrt(s) / h;
  };
  double tv = 0.0;
  double best = 0.0;
  for (Index k = 0; k + 1 < m; ++k) {
    const Index c = order[static_cast<std::size_t>(k)];
    // Cells whose forward difference touches c: c itself and its backward neighbors.
    Index affected[3] = {c, grid.backward(c, 0), grid.backward(c, 1)};
    for (Index a : affected)
      if (a >= 0) tv -= cell_norm(a);
    chi[c] = 1.0;
    for (Index a : affected)
      if (a >= 0) tv += cell_norm(a);
    const double frac = static_cast<double>(k + 1) / static_cast<double>(m);
    // ||chi - frac||_1 = |E| (1 - frac) + |E^c| frac, in cell units.
    const double l1 = ((k + 1) * (1.0 - frac) + (m - k - 1) * frac) * h * h;
    const double tv_w = tv * h * h;
    if (tv_w > 0.0) best = std::max(best, l1 / tv_w);
  }
  return best;
}

}  // namespace

Eigen::VectorXd second_neumann_eigenvector(const GridSpec& grid) {
  const Index m = grid.cell_count();
  const SparseMatrix d = gradient_matrix(grid);
  const SparseMatrix lap = SparseMatrix(d.transpose()) * d;
  std::mt19937_64 rng(0xe19e);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd v(m);
  for (Index c = 0; c < m; ++c) v[c] = dist(rng);
  v.array() -= v.mean();
  v.normalize();
  // Inverse iteration on the mean-zero subspace.
  for (int it = 0; it < 40; ++it) {
    Eigen::VectorXd w = solve_constant_nullspace(lap, v, 1e-10, 20000, "poincare eigenvector");
    const double nw = w.norm();
    if (nw == 0.0) break;
    v = w / nw;
  }
  return v;
}

double poincare_constant(const GridSpec& grid) {
  const Index m = grid.cell_count();
  if (m < 2) throw GridError("poincare_constant: mask has a single cell");
  double best = 0.0;
  const GridPtr gp = std::make_shared<const GridSpec>(grid);

  // Coordinate threshold steps: the sweep over a coordinate ordering reaches
  // every split {x >= t} (ties broken by the other coordinate, which only adds
  // further staircase probes).
  for (int ax = 0; ax < 2; ++ax) {
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index p, Index q) {
      const int kp = ax == 0 ? grid.cell_i(p) : grid.cell_j(p);
      const int kq = ax == 0 ? grid.cell_i(q) : grid.cell_j(q);
      return kp > kq;
    });
    // Only evaluate complete columns/rows: restrict the sweep to block boundaries.
    Eigen::VectorXd u(m);
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      const auto key = [&](Index c) { return ax == 0 ? grid.cell_i(c) : grid.cell_j(c); };
      if (key(order[k]) == key(order[k + 1])) continue;
      const double frac = static_cast<double>(k + 1) / static_cast<double>(m);
      u.setConstant(-frac);
      for (std::size_t q = 0; q <= k; ++q) u[order[q]] = 1.0 - frac;
      ScalarField f(gp, u);
      const double tv = total_variation(f);
      if (tv > 0.0) best = std::max(best, l1_norm(f) / tv);
    }
  }

  // Second Neumann eigenfunction and its level-set sweep.
  const Eigen::VectorXd phi = second_neumann_eigenvector(grid);
  {
    ScalarField f(gp, phi);
    const double tv = total_variation(f);
    if (tv > 0.0) best = std::max(best, l1_norm(f) / tv);
  }
  for (double sign : {1.0, -1.0}) {
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index p, Index q) { return sign * phi[p] > sign * phi[q]; });
    best = std::max(best, sweep_ratio(grid, order));
  }
  return best;
}

}  // namespace parea
