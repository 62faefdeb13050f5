// Discrete calculus on masked rectangular grids.
//
// Cells are addressed by (i, j) lattice indices and, once masked, by a compact
// index in row-major order (j outer, i inner). Scalar fields hold one value per
// masked cell; vector fields hold one 2-vector per masked cell.
//
// The gradient is a forward difference that vanishes across the boundary. The
// component stored at a cell is read as the flux through its +x / +y face. The
// divergence and normal trace are defined so that
//
//   sum_edges [b, nu] u h  =  <u, div b> h^2  +  <b, grad u> h^2
//
// holds exactly for every pair (u, b).
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace parea {

using Index = Eigen::Index;

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Outward direction of a boundary edge relative to its cell.
enum class Direction : std::uint8_t { PosX = 0, NegX = 1, PosY = 2, NegY = 3 };

inline int axis_of(Direction d) { return static_cast<int>(d) / 2; }
inline double sign_of(Direction d) { return (static_cast<int>(d) % 2 == 0) ? 1.0 : -1.0; }
const char* to_string(Direction d);

struct BoundaryEdge {
  Index cell;
  Direction dir;
  bool operator==(const BoundaryEdge&) const = default;
};

/// Rectangular lattice of nx * ny cells with mesh width h and a 4-connected
/// domain mask. Immutable once constructed.
class GridSpec {
 public:
  GridSpec(int nx, int ny, double h, std::vector<bool> mask);

  static GridSpec full(int nx, int ny, double h);
  /// Cells whose centers lie strictly inside the inscribed disk.
  static GridSpec disk(int nx, int ny, double h);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double h() const { return h_; }
  const std::vector<bool>& mask() const { return mask_; }
  bool masked(int i, int j) const {
    return i >= 0 && j >= 0 && i < nx_ && j < ny_ && mask_[lattice(i, j)];
  }

  Index cell_count() const { return static_cast<Index>(cells_.size()); }
  /// Compact index of lattice cell (i, j), or -1 when outside the mask.
  Index index(int i, int j) const {
    return (i >= 0 && j >= 0 && i < nx_ && j < ny_) ? index_[lattice(i, j)] : -1;
  }
  int cell_i(Index c) const { return cells_[c][0]; }
  int cell_j(Index c) const { return cells_[c][1]; }
  /// Physical coordinates of the cell center, ((i + 1/2) h, (j + 1/2) h).
  Eigen::Vector2d center(Index c) const {
    return {(cells_[c][0] + 0.5) * h_, (cells_[c][1] + 0.5) * h_};
  }
  /// Domain center: the midpoint of the lattice bounding box.
  Eigen::Vector2d lattice_center() const { return {0.5 * nx_ * h_, 0.5 * ny_ * h_}; }

  Index forward(Index c, int axis) const { return fwd_[c][axis]; }
  Index backward(Index c, int axis) const { return bwd_[c][axis]; }

  const std::vector<BoundaryEdge>& boundary_edges() const { return edges_; }
  Index edge_count() const { return static_cast<Index>(edges_.size()); }

  /// Recomputes the boundary edge list from the mask (used to check the
  /// stored list against its definition).
  std::vector<BoundaryEdge> derive_boundary_edges() const;

  bool operator==(const GridSpec& o) const {
    return nx_ == o.nx_ && ny_ == o.ny_ && h_ == o.h_ && mask_ == o.mask_;
  }

  /// Same mask, different mesh width.
  GridSpec rescaled(double h) const { return GridSpec(nx_, ny_, h, mask_); }

 private:
  std::size_t lattice(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(i);
  }

  int nx_;
  int ny_;
  double h_;
  std::vector<bool> mask_;
  std::vector<Index> index_;
  std::vector<std::array<int, 2>> cells_;
  std::vector<std::array<Index, 2>> fwd_;
  std::vector<std::array<Index, 2>> bwd_;
  std::vector<BoundaryEdge> edges_;
};

using GridPtr = std::shared_ptr<const GridSpec>;

inline GridPtr make_grid(GridSpec g) { return std::make_shared<const GridSpec>(std::move(g)); }

template <typename Scalar>
using Column = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using TwoColumns = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

template <typename Scalar>
struct BasicScalarField {
  GridPtr grid;
  Column<Scalar> values;

  BasicScalarField() = default;
  explicit BasicScalarField(GridPtr g) : grid(std::move(g)), values(Column<Scalar>::Zero(grid->cell_count())) {}
  BasicScalarField(GridPtr g, Column<Scalar> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid->cell_count()) throw GridError("scalar field size does not match the mask");
  }
  static BasicScalarField constant(GridPtr g, Scalar c) {
    const Index n = g->cell_count();
    return BasicScalarField(std::move(g), Column<Scalar>::Constant(n, c));
  }
  Scalar operator[](Index c) const { return values[c]; }
  Scalar& operator[](Index c) { return values[c]; }
  Index size() const { return values.size(); }
};

template <typename Scalar>
struct BasicVectorField {
  GridPtr grid;
  TwoColumns<Scalar> values;

  BasicVectorField() = default;
  explicit BasicVectorField(GridPtr g) : grid(std::move(g)), values(TwoColumns<Scalar>::Zero(grid->cell_count(), 2)) {}
  BasicVectorField(GridPtr g, TwoColumns<Scalar> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.rows() != grid->cell_count()) throw GridError("vector field size does not match the mask");
  }
  Index size() const { return values.rows(); }
};

/// One value per boundary edge, in the order of GridSpec::boundary_edges().
template <typename Scalar>
struct BasicBoundaryTrace {
  GridPtr grid;
  Column<Scalar> values;

  BasicBoundaryTrace() = default;
  explicit BasicBoundaryTrace(GridPtr g) : grid(std::move(g)), values(Column<Scalar>::Zero(grid->edge_count())) {}
  BasicBoundaryTrace(GridPtr g, Column<Scalar> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid->edge_count()) throw GridError("boundary trace size does not match the edge list");
  }
  Index size() const { return values.size(); }
};

using ScalarField = BasicScalarField<double>;
using VectorField = BasicVectorField<double>;
using BoundaryTrace = BasicBoundaryTrace<double>;

template <typename Field>
void require_same_grid(const GridPtr& g, const Field& f) {
  if (f.grid != g && !(f.grid && g && *f.grid == *g)) throw GridError("fields live on different grids");
}

// ---------------------------------------------------------------------------
// Raw operators on compact arrays. D is the forward-difference gradient, D^T its
// matrix transpose (the adjoint for the cell-sum inner product; the h^2 weights
// cancel).

template <typename Scalar>
void apply_gradient(const GridSpec& g, const Column<Scalar>& u, TwoColumns<Scalar>& out) {
  const Index n = g.cell_count();
  const Scalar inv_h = Scalar(1) / Scalar(g.h());
  out.resize(n, 2);
  for (Index c = 0; c < n; ++c) {
    for (int ax = 0; ax < 2; ++ax) {
      const Index f = g.forward(c, ax);
      out(c, ax) = f >= 0 ? (u[f] - u[c]) * inv_h : Scalar(0);
    }
  }
}

template <typename Scalar>
void apply_gradient_transpose(const GridSpec& g, const TwoColumns<Scalar>& b, Column<Scalar>& out) {
  const Index n = g.cell_count();
  const Scalar inv_h = Scalar(1) / Scalar(g.h());
  out.resize(n);
  for (Index c = 0; c < n; ++c) {
    Scalar s(0);
    for (int ax = 0; ax < 2; ++ax) {
      if (g.forward(c, ax) >= 0) s -= b(c, ax);
      const Index p = g.backward(c, ax);
      if (p >= 0) s += b(p, ax);
    }
    out[c] = s * inv_h;
  }
}

/// Adds (1/h) * sum of the edge values at each edge's cell.
template <typename Scalar>
void add_edge_sum(const GridSpec& g, const Column<Scalar>& t, Scalar scale, Column<Scalar>& out) {
  const auto& edges = g.boundary_edges();
  for (std::size_t e = 0; e < edges.size(); ++e) out[edges[e].cell] += scale * t[static_cast<Index>(e)];
}

// ---------------------------------------------------------------------------
// Field-level operators.

template <typename Scalar>
BasicVectorField<Scalar> gradient(const BasicScalarField<Scalar>& u) {
  BasicVectorField<Scalar> out(u.grid);
  apply_gradient(*u.grid, u.values, out.values);
  return out;
}

/// Outward normal component of b at the cell adjacent to each boundary edge.
template <typename Scalar>
BasicBoundaryTrace<Scalar> normal_trace(const BasicVectorField<Scalar>& b) {
  const auto& edges = b.grid->boundary_edges();
  BasicBoundaryTrace<Scalar> out(b.grid);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& edge = edges[e];
    out.values[static_cast<Index>(e)] = Scalar(sign_of(edge.dir)) * b.values(edge.cell, axis_of(edge.dir));
  }
  return out;
}

/// Divergence of b with an explicit boundary flux t:
///   div(b; t) = -D^T b + (1/h) sum_{edges at cell} t.
/// The trace identity holds for any t by construction.
template <typename Scalar>
BasicScalarField<Scalar> divergence(const BasicVectorField<Scalar>& b, const BasicBoundaryTrace<Scalar>& t) {
  require_same_grid(b.grid, t);
  BasicScalarField<Scalar> out(b.grid);
  apply_gradient_transpose(*b.grid, b.values, out.values);
  out.values = -out.values;
  add_edge_sum(*b.grid, t.values, Scalar(1) / Scalar(b.grid->h()), out.values);
  return out;
}

/// Backward-difference divergence; at a cell without a backward neighbor the
/// missing face value is taken from the cell itself. Equals
/// divergence(b, normal_trace(b)).
template <typename Scalar>
BasicScalarField<Scalar> divergence(const BasicVectorField<Scalar>& b) {
  const GridSpec& g = *b.grid;
  const Scalar inv_h = Scalar(1) / Scalar(g.h());
  BasicScalarField<Scalar> out(b.grid);
  for (Index c = 0; c < g.cell_count(); ++c) {
    Scalar s(0);
    for (int ax = 0; ax < 2; ++ax) {
      const Index p = g.backward(c, ax);
      s += b.values(c, ax) - (p >= 0 ? b.values(p, ax) : b.values(c, ax));
    }
    out.values[c] = s * inv_h;
  }
  return out;
}

template <typename Scalar>
Scalar cell_inner(const BasicScalarField<Scalar>& u, const BasicScalarField<Scalar>& v) {
  const Scalar h = Scalar(u.grid->h());
  return u.values.dot(v.values) * h * h;
}

template <typename Scalar>
Scalar cell_inner(const BasicVectorField<Scalar>& b, const BasicVectorField<Scalar>& c) {
  const Scalar h = Scalar(b.grid->h());
  return (b.values.array() * c.values.array()).sum() * h * h;
}

/// Sum over boundary edges of t * u(cell) * h.
template <typename Scalar>
Scalar edge_inner(const BasicBoundaryTrace<Scalar>& t, const BasicScalarField<Scalar>& u) {
  const auto& edges = u.grid->boundary_edges();
  Scalar s(0);
  for (std::size_t e = 0; e < edges.size(); ++e) s += t.values[static_cast<Index>(e)] * u.values[edges[e].cell];
  return s * Scalar(u.grid->h());
}

/// sum_edges [b, nu] u h - <u, div b> h^2 - <b, Du> h^2. Zero up to rounding.
template <typename Scalar>
Scalar ibp_defect(const BasicScalarField<Scalar>& u, const BasicVectorField<Scalar>& b) {
  require_same_grid(u.grid, b);
  return edge_inner(normal_trace(b), u) - cell_inner(u, divergence(b)) - cell_inner(b, gradient(u));
}

template <typename Scalar>
BasicScalarField<Scalar> mean_zero_project(const BasicScalarField<Scalar>& u) {
  BasicScalarField<Scalar> out = u;
  if (out.values.size() > 0) out.values.array() -= out.values.mean();
  return out;
}

/// Pointwise Euclidean norm of a vector field.
template <typename Scalar>
Column<Scalar> pointwise_norm(const TwoColumns<Scalar>& v) {
  return v.rowwise().norm();
}

/// Estimate of the largest singular value of the gradient from a Lanczos
/// (Krylov-accelerated power) iteration on D^T D. The estimate never exceeds
/// the true norm. Throws std::runtime_error after 10^4 sweeps without
/// convergence.
double operator_norm(const GridSpec& grid);

/// Lower-bound estimate of the L1 Poincare constant C in
/// ||u - mean u||_1 <= C * TV(u), maximized over coordinate step functions,
/// the second Neumann eigenfunction and the sweep of its super-level sets.
double poincare_constant(const GridSpec& grid);

/// Second eigenvector of the Neumann graph Laplacian D^T D (unit norm,
/// mean-zero), by inverse iteration from a fixed start.
Eigen::VectorXd second_neumann_eigenvector(const GridSpec& grid);

/// Discrete total variation sum |Du| h^2 and L1 norm sum |u| h^2.
double total_variation(const ScalarField& u);
double l1_norm(const ScalarField& u);

/// Solves the Neumann graph Laplacian system D^T D x = rhs (rhs mean-zero)
/// by conjugate gradients, returning the mean-zero solution. Throws if the
/// relative residual does not reach tol.
Eigen::VectorXd solve_neumann_laplacian(const GridSpec& grid, const Eigen::VectorXd& rhs, double tol,
                                        int max_iters = 20000);

}  // namespace parea
