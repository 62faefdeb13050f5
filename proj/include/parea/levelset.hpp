// Level sets and the psi-perimeter
//
//   P_psi(E; A) = sum_{x in A} a |D chi_E + F chi_E| h^2 + sum_{x in A} H chi_E h^2,
//
// with minimality checks against local competitors, the truncations
// chi_{eps,lambda}, lattice density sets and the boundary barrier probe.
#pragma once

#include "parea/problem.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace parea {

class LevelSetError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One flag per masked cell.
using CellMask = std::vector<bool>;

inline CellMask full_region(const GridSpec& g) { return CellMask(static_cast<std::size_t>(g.cell_count()), true); }

struct LevelSet {
  GridPtr grid;
  CellMask member;
  std::optional<double> lambda;

  LevelSet() = default;
  LevelSet(GridPtr g, CellMask m, std::optional<double> l = std::nullopt);
  static LevelSet empty(GridPtr g) { return LevelSet(g, CellMask(static_cast<std::size_t>(g->cell_count()), false)); }

  bool operator[](Index c) const { return member[static_cast<std::size_t>(c)]; }
  Index count() const;
  ScalarField indicator() const;
};

struct PsiReport {
  double perimeter_term = 0.0;  // sum a |D chi| h^2
  double drift_term = 0.0;      // sum a (|D chi + F chi| - |D chi|) h^2
  double curvature_term = 0.0;  // sum H chi h^2
  double total = 0.0;
  std::string region;
};

/// member = (u >= lambda).
LevelSet super_level_set(const ScalarField& u, double lambda);

PsiReport psi_perimeter(const LevelSet& E, const ProblemSpec& spec, const CellMask& region);
inline PsiReport psi_perimeter(const LevelSet& E, const ProblemSpec& spec) {
  return psi_perimeter(E, spec, full_region(*spec.grid()));
}

/// psi-energy of a function: sum a |Dv + F 1[v != 0]| h^2 + sum H v h^2 over
/// the region. Equals psi_perimeter for indicators.
double psi_energy(const ScalarField& v, const ProblemSpec& spec, const CellMask& region);

/// min(1, max(0, (u - lambda) / eps)).
ScalarField chi_epsilon(const ScalarField& u, double lambda, double eps);

struct LscReport {
  double indicator_value = 0.0;  // P_psi(E_lambda; Omega)
  std::vector<double> eps;
  std::vector<double> values;    // psi_energy(chi_eps)
  std::vector<double> slack;     // per-eps discretization allowance
  bool stabilized = false;       // chi at the smallest eps equals 1[u > lambda]
  bool pass = false;
};

/// P_psi(E_lambda) <= min_k (values_k + slack_k) + 1e-8. slack_k bounds what
/// the indicator can lose against chi_eps on the cells where they differ:
/// sum over those cells and their backward neighbors of (a |D chi + F chi| + |H|) h^2.
LscReport lsc_check(const ScalarField& u, double lambda, const ProblemSpec& spec, const std::vector<double>& eps_list);

/// Lattice density set: masked cells whose (2r+1)^2 neighborhood, intersected
/// with the lattice, holds a member fraction above 1 - 1 / (2 (2r+1)^2).
/// Unmasked lattice cells count as non-members.
CellMask density_set(const LevelSet& E, int radius = 1);

/// Cells of the density set with a masked 4-neighbor outside it.
CellMask density_boundary(const LevelSet& E, int radius = 1);

/// Lattice rectangle [i0, i0 + w) x [j0, j0 + h).
struct Window {
  int i0 = 0, j0 = 0, w = 0, h = 0;
  int size() const { return w * h; }
};

struct MinimalityVerdict {
  bool pass = true;
  double value = 0.0;       // P_psi(E; Omega)
  double best_value = 0.0;  // best competitor
  double margin = 0.0;      // value - best_value (> 0: a competitor improves)
  double tol = 0.0;
  std::int64_t competitors = 0;
  std::vector<Index> best_flip;  // cells where the best competitor differs from E
};

/// Tolerance coupling the check to the solver accuracy: 2 gap_tol (1 + |P|).
double minimality_tolerance(double gap_tol, double value);

/// All 2^|window| competitors agreeing with E outside the window. Throws
/// LevelSetError for windows over 16 cells or leaving the mask.
MinimalityVerdict check_minimality_exhaustive(const LevelSet& E, const ProblemSpec& spec, const Window& window,
                                              double gap_tol = 1e-3);

/// Random 4-connected flip sets of 1..max_flip interior cells (cells without a
/// boundary edge), plus any explicitly listed flip sets, evaluated first.
MinimalityVerdict check_minimality_random(const LevelSet& E, const ProblemSpec& spec, int trials, int max_flip,
                                          std::uint64_t seed, double gap_tol = 1e-3,
                                          const std::vector<std::vector<Index>>& forced = {});

/// Windows whose cells and 4-neighbors are all interior (no boundary edges).
std::vector<Window> interior_windows(const GridSpec& g, int w, int h);

struct AnnealConfig {
  int sweeps_per_cell = 2000;  // proposals = sweeps_per_cell * free cells
  double t_final_ratio = 1e-4; // T_end / T_0, geometric cooling
  std::uint64_t seed = 0;
};

struct BarrierReport {
  Index free_cells = 0;    // masked cells with centers inside B(eps, x0)
  bool exhaustive = true;
  CellMask V;              // the minimizing W
  double value = 0.0;      // P_psi(V; R^2)
  double omega_value = 0.0;// P_psi(Omega; R^2)
  CellMask density_boundary;
  std::vector<Index> contact_edges;  // boundary edges of Omega inside B(eps - h, x0) whose cell is in V
  bool holds = true;
};

/// P_psi(W; R^2) for W inside the mask: the sum runs over the lattice padded
/// by one ring, with chi = 0 off W. Outside the mask, a is extended by the
/// mean over masked forward neighbors.
double psi_perimeter_plane(const CellMask& W, const ProblemSpec& spec);

/// Minimizes P_psi(W; R^2) over W inside Omega with W = Omega outside the open
/// ball B(eps, x0). x0 must lie on a boundary edge. The barrier holds at the
/// probe when no boundary edge of Omega with midpoint in B(eps - h, x0) (the
/// rim pinned by the constraint excluded) has its cell in V.
BarrierReport barrier_probe(const ProblemSpec& spec, const Eigen::Vector2d& x0, double eps,
                            const AnnealConfig& anneal = {});

}  // namespace parea
