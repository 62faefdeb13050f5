#include "parea/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_set>

namespace parea {

LevelSet::LevelSet(GridPtr g, CellMask m, std::optional<double> l)
    : grid(std::move(g)), member(std::move(m)), lambda(l) {
  if (static_cast<Index>(member.size()) != grid->cell_count())
    throw LevelSetError("level set size does not match the mask");
}

Index LevelSet::count() const { return std::count(member.begin(), member.end(), true); }

ScalarField LevelSet::indicator() const {
  ScalarField f(grid);
  for (Index c = 0; c < f.size(); ++c) f[c] = (*this)[c] ? 1.0 : 0.0;
  return f;
}

LevelSet super_level_set(const ScalarField& u, double lambda) {
  CellMask m(static_cast<std::size_t>(u.size()));
  for (Index c = 0; c < u.size(); ++c) m[static_cast<std::size_t>(c)] = u[c] >= lambda;
  return LevelSet(u.grid, std::move(m), lambda);
}

namespace {

// Per-cell psi integrand inside Omega (no flux across the boundary):
// a |Dv + F g| h^2 + H v h^2, where g gates the drift.
struct CellTerms {
  const ProblemSpec& spec;
  const GridSpec& g;
  double h;

  explicit CellTerms(const ProblemSpec& s) : spec(s), g(*s.grid()), h(s.grid()->h()) {}

  Eigen::Vector2d jump(const Eigen::VectorXd& v, Index c) const {
    Eigen::Vector2d d;
    for (int ax = 0; ax < 2; ++ax) {
      const Index f = g.forward(c, ax);
      d[ax] = f >= 0 ? (v[f] - v[c]) / h : 0.0;
    }
    return d;
  }
  double tv(const Eigen::VectorXd& v, Index c) const { return spec.weight()[c] * jump(v, c).norm() * h * h; }
  double psi(const Eigen::VectorXd& v, Index c) const {
    const double gate = v[c] != 0.0 ? 1.0 : 0.0;
    const Eigen::Vector2d p = jump(v, c) + gate * spec.drift().values.row(c).transpose();
    return (spec.weight()[c] * p.norm() + spec.curvature()[c] * v[c]) * h * h;
  }
};

Eigen::VectorXd to_vector(const CellMask& m) {
  Eigen::VectorXd v(static_cast<Index>(m.size()));
  for (std::size_t c = 0; c < m.size(); ++c) v[static_cast<Index>(c)] = m[c] ? 1.0 : 0.0;
  return v;
}

void require_region(const GridSpec& g, const CellMask& region) {
  if (static_cast<Index>(region.size()) != g.cell_count()) throw LevelSetError("region size does not match the mask");
}

// Cells whose psi term depends on the given cells: the cells and their
// backward neighbors.
std::vector<Index> stencil_closure(const GridSpec& g, const std::vector<Index>& cells) {
  std::vector<Index> out;
  for (Index c : cells) {
    out.push_back(c);
    for (int ax = 0; ax < 2; ++ax)
      if (g.backward(c, ax) >= 0) out.push_back(g.backward(c, ax));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

PsiReport psi_perimeter(const LevelSet& E, const ProblemSpec& spec, const CellMask& region) {
  require_same_grid(spec.grid(), E);
  require_region(*spec.grid(), region);
  const CellTerms t(spec);
  const Eigen::VectorXd chi = to_vector(E.member);
  PsiReport r;
  Index cells = 0;
  for (Index c = 0; c < chi.size(); ++c) {
    if (!region[static_cast<std::size_t>(c)]) continue;
    ++cells;
    const double tv = t.tv(chi, c);
    const double curv = spec.curvature()[c] * chi[c] * t.h * t.h;
    r.perimeter_term += tv;
    r.drift_term += t.psi(chi, c) - curv - tv;
    r.curvature_term += curv;
  }
  r.total = r.perimeter_term + r.drift_term + r.curvature_term;
  r.region = std::to_string(cells) + " of " + std::to_string(chi.size()) + " cells";
  return r;
}

double psi_energy(const ScalarField& v, const ProblemSpec& spec, const CellMask& region) {
  require_same_grid(spec.grid(), v);
  require_region(*spec.grid(), region);
  const CellTerms t(spec);
  double s = 0.0;
  for (Index c = 0; c < v.size(); ++c)
    if (region[static_cast<std::size_t>(c)]) s += t.psi(v.values, c);
  return s;
}

ScalarField chi_epsilon(const ScalarField& u, double lambda, double eps) {
  if (!(eps > 0.0)) throw LevelSetError("chi_epsilon needs eps > 0");
  ScalarField out(u.grid);
  out.values = ((u.values.array() - lambda) / eps).max(0.0).min(1.0).matrix();
  return out;
}

LscReport lsc_check(const ScalarField& u, double lambda, const ProblemSpec& spec, const std::vector<double>& eps_list) {
  require_same_grid(spec.grid(), u);
  for (std::size_t k = 0; k < eps_list.size(); ++k)
    if (!(eps_list[k] > 0.0) || (k > 0 && !(eps_list[k] < eps_list[k - 1])))
      throw LevelSetError("lsc_check needs a strictly decreasing list of positive eps");
  const GridSpec& g = *spec.grid();
  const CellTerms t(spec);
  const LevelSet E = super_level_set(u, lambda);
  const Eigen::VectorXd chi = to_vector(E.member);
  const CellMask all = full_region(g);

  LscReport r;
  r.indicator_value = psi_perimeter(E, spec).total;
  double bound = std::numeric_limits<double>::infinity();
  for (double eps : eps_list) {
    const ScalarField v = chi_epsilon(u, lambda, eps);
    std::vector<Index> differ;
    for (Index c = 0; c < v.size(); ++c)
      if (v[c] != chi[c]) differ.push_back(c);
    double slack = 0.0;
    for (Index c : stencil_closure(g, differ))
      slack += t.psi(chi, c) - spec.curvature()[c] * chi[c] * t.h * t.h +
               std::abs(spec.curvature()[c]) * std::abs(chi[c] - v[c]) * t.h * t.h;
    r.eps.push_back(eps);
    r.values.push_back(psi_energy(v, spec, all));
    r.slack.push_back(slack);
    bound = std::min(bound, r.values.back() + slack);
  }
  if (!eps_list.empty()) {
    const ScalarField v = chi_epsilon(u, lambda, eps_list.back());
    r.stabilized = true;
    for (Index c = 0; c < v.size(); ++c)
      if (v[c] != (u[c] > lambda ? 1.0 : 0.0)) r.stabilized = false;
  }
  r.pass = r.indicator_value <= bound + 1e-8;
  return r;
}

CellMask density_set(const LevelSet& E, int radius) {
  if (radius < 1) throw LevelSetError("density radius must be at least 1");
  const GridSpec& g = *E.grid;
  const double side = 2.0 * radius + 1.0;
  const double threshold = 1.0 - 1.0 / (2.0 * side * side);
  CellMask out(static_cast<std::size_t>(g.cell_count()), false);
  for (Index c = 0; c < g.cell_count(); ++c) {
    const int i = g.cell_i(c), j = g.cell_j(c);
    int total = 0, members = 0;
    for (int dj = -radius; dj <= radius; ++dj)
      for (int di = -radius; di <= radius; ++di) {
        const int p = i + di, q = j + dj;
        if (p < 0 || q < 0 || p >= g.nx() || q >= g.ny()) continue;
        ++total;
        const Index n = g.index(p, q);
        if (n >= 0 && E[n]) ++members;
      }
    out[static_cast<std::size_t>(c)] = static_cast<double>(members) / total > threshold;
  }
  return out;
}

CellMask density_boundary(const LevelSet& E, int radius) {
  const GridSpec& g = *E.grid;
  const CellMask d = density_set(E, radius);
  CellMask out(d.size(), false);
  for (Index c = 0; c < g.cell_count(); ++c) {
    if (!d[static_cast<std::size_t>(c)]) continue;
    for (int ax = 0; ax < 2; ++ax)
      for (Index n : {g.forward(c, ax), g.backward(c, ax)})
        if (n >= 0 && !d[static_cast<std::size_t>(n)]) out[static_cast<std::size_t>(c)] = true;
  }
  return out;
}

// ---------------------------------------------------------------------------

double minimality_tolerance(double gap_tol, double value) { return 2.0 * gap_tol * (1.0 + std::abs(value)); }

namespace {

// Evaluates P_psi(.; Omega) changes under local flips of chi.
class FlipEvaluator {
 public:
  FlipEvaluator(const LevelSet& E, const ProblemSpec& spec) : terms_(spec), chi_(to_vector(E.member)) {
    for (Index c = 0; c < chi_.size(); ++c) base_ += terms_.psi(chi_, c);
  }
  double base() const { return base_; }

  // Change of P_psi when the cells in `cells` take the given values.
  double delta(const std::vector<Index>& cells, const std::vector<Index>& closure, const std::vector<double>& values) {
    double before = 0.0, after = 0.0;
    for (Index c : closure) before += terms_.psi(chi_, c);
    std::vector<double> saved(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      saved[k] = chi_[cells[k]];
      chi_[cells[k]] = values[k];
    }
    for (Index c : closure) after += terms_.psi(chi_, c);
    for (std::size_t k = 0; k < cells.size(); ++k) chi_[cells[k]] = saved[k];
    return after - before;
  }
  double chi(Index c) const { return chi_[c]; }

 private:
  CellTerms terms_;
  Eigen::VectorXd chi_;
  double base_ = 0.0;
};

std::vector<char> boundary_cells(const GridSpec& g) {
  std::vector<char> b(static_cast<std::size_t>(g.cell_count()), 0);
  for (const auto& e : g.boundary_edges()) b[static_cast<std::size_t>(e.cell)] = 1;
  return b;
}

}  // namespace

MinimalityVerdict check_minimality_exhaustive(const LevelSet& E, const ProblemSpec& spec, const Window& window,
                                              double gap_tol) {
  require_same_grid(spec.grid(), E);
  const GridSpec& g = *spec.grid();
  if (window.w < 0 || window.h < 0) throw LevelSetError("window extents must be non-negative");
  if (window.size() > 16) throw LevelSetError("exhaustive window holds more than 16 cells");
  std::vector<Index> cells;
  for (int j = window.j0; j < window.j0 + window.h; ++j)
    for (int i = window.i0; i < window.i0 + window.w; ++i) {
      const Index c = g.index(i, j);
      if (c < 0) throw LevelSetError("window leaves the mask");
      cells.push_back(c);
    }

  FlipEvaluator eval(E, spec);
  MinimalityVerdict v;
  v.value = eval.base();
  v.tol = minimality_tolerance(gap_tol, v.value);
  v.best_value = v.value;
  if (cells.empty()) return v;

  const std::vector<Index> closure = stencil_closure(g, cells);
  const std::uint32_t n = static_cast<std::uint32_t>(cells.size());
  std::vector<double> values(n);
  std::uint32_t best_bits = 0;
  bool improved = false;
  for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
    for (std::uint32_t k = 0; k < n; ++k) values[k] = (bits >> k) & 1u ? 1.0 : 0.0;
    const double val = v.value + eval.delta(cells, closure, values);
    ++v.competitors;
    if (val < v.best_value) {
      v.best_value = val;
      best_bits = bits;
      improved = true;
    }
  }
  if (improved)
    for (std::uint32_t k = 0; k < n; ++k)
      if ((((best_bits >> k) & 1u) ? 1.0 : 0.0) != eval.chi(cells[k])) v.best_flip.push_back(cells[k]);
  v.margin = v.value - v.best_value;
  v.pass = v.value <= v.best_value + v.tol;
  return v;
}

MinimalityVerdict check_minimality_random(const LevelSet& E, const ProblemSpec& spec, int trials, int max_flip,
                                          std::uint64_t seed, double gap_tol,
                                          const std::vector<std::vector<Index>>& forced) {
  require_same_grid(spec.grid(), E);
  if (trials < 1) throw LevelSetError("check_minimality_random needs trials >= 1");
  const GridSpec& g = *spec.grid();
  FlipEvaluator eval(E, spec);
  MinimalityVerdict v;
  v.value = eval.base();
  v.best_value = v.value;
  v.tol = minimality_tolerance(gap_tol, v.value);

  auto try_flip = [&](const std::vector<Index>& cells) {
    std::vector<double> values(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) values[k] = 1.0 - eval.chi(cells[k]);
    const double val = v.value + eval.delta(cells, stencil_closure(g, cells), values);
    ++v.competitors;
    if (val < v.best_value) {
      v.best_value = val;
      v.best_flip = cells;
    }
  };

  for (const auto& cells : forced) {
    for (Index c : cells)
      if (c < 0 || c >= g.cell_count()) throw LevelSetError("forced flip names a cell outside the mask");
    if (!cells.empty()) try_flip(cells);
  }

  const std::vector<char> on_boundary = boundary_cells(g);
  std::vector<Index> interior;
  for (Index c = 0; c < g.cell_count(); ++c)
    if (!on_boundary[static_cast<std::size_t>(c)]) interior.push_back(c);

  if (max_flip >= 1 && !interior.empty()) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_cell(0, interior.size() - 1);
    std::uniform_int_distribution<int> pick_size(1, max_flip);
    for (int t = 0; t < trials; ++t) {
      const int size = pick_size(rng);
      std::vector<Index> cells{interior[pick_cell(rng)]};
      std::vector<Index> frontier;
      auto push_neighbors = [&](Index c) {
        for (int ax = 0; ax < 2; ++ax)
          for (Index n : {g.forward(c, ax), g.backward(c, ax)})
            if (n >= 0 && !on_boundary[static_cast<std::size_t>(n)] &&
                std::find(cells.begin(), cells.end(), n) == cells.end())
              frontier.push_back(n);
      };
      push_neighbors(cells[0]);
      while (static_cast<int>(cells.size()) < size && !frontier.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, frontier.size() - 1);
        const std::size_t k = pick(rng);
        const Index c = frontier[k];
        frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(k));
        if (std::find(cells.begin(), cells.end(), c) != cells.end()) continue;
        cells.push_back(c);
        push_neighbors(c);
      }
      try_flip(cells);
    }
  }
  v.margin = v.value - v.best_value;
  v.pass = v.value <= v.best_value + v.tol;
  return v;
}

std::vector<Window> interior_windows(const GridSpec& g, int w, int h) {
  const std::vector<char> on_boundary = boundary_cells(g);
  std::vector<Window> out;
  for (int j0 = 0; j0 + h <= g.ny(); ++j0)
    for (int i0 = 0; i0 + w <= g.nx(); ++i0) {
      bool ok = true;
      for (int j = j0; j < j0 + h && ok; ++j)
        for (int i = i0; i < i0 + w && ok; ++i) {
          const Index c = g.index(i, j);
          ok = c >= 0 && !on_boundary[static_cast<std::size_t>(c)];
        }
      if (ok) out.push_back({i0, j0, w, h});
    }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// psi integrand over the padded lattice, for sets inside the mask.
class PlaneTerms {
 public:
  PlaneTerms(const ProblemSpec& spec, const CellMask& W) : spec_(spec), g_(*spec.grid()), w_(W) {}

  double chi(int i, int j) const {
    const Index c = g_.index(i, j);
    return c >= 0 && w_[static_cast<std::size_t>(c)] ? 1.0 : 0.0;
  }
  double weight(int i, int j) const {
    const Index c = g_.index(i, j);
    if (c >= 0) return spec_.weight()[c];
    double s = 0.0;
    int n = 0;
    for (Index f : {g_.index(i + 1, j), g_.index(i, j + 1)})
      if (f >= 0) {
        s += spec_.weight()[f];
        ++n;
      }
    return n > 0 ? s / n : 0.0;
  }
  double term(int i, int j) const {
    const double h = g_.h();
    const double x = chi(i, j);
    Eigen::Vector2d p((chi(i + 1, j) - x) / h, (chi(i, j + 1) - x) / h);
    const Index c = g_.index(i, j);
    double curv = 0.0;
    if (c >= 0 && x != 0.0) {
      p += spec_.drift().values.row(c).transpose();
      curv = spec_.curvature()[c];
    }
    return (weight(i, j) * p.norm() + curv * x) * h * h;
  }
  void set(Index c, bool v) { w_[static_cast<std::size_t>(c)] = v; }
  const CellMask& set_mask() const { return w_; }

 private:
  const ProblemSpec& spec_;
  const GridSpec& g_;
  CellMask w_;
};

double plane_total(const PlaneTerms& t, const GridSpec& g) {
  double s = 0.0;
  for (int j = -1; j < g.ny(); ++j)
    for (int i = -1; i < g.nx(); ++i) s += t.term(i, j);
  return s;
}

// Lattice positions whose plane term depends on the listed cells.
std::vector<std::array<int, 2>> plane_closure(const GridSpec& g, const std::vector<Index>& cells) {
  std::vector<std::array<int, 2>> out;
  for (Index c : cells) {
    const int i = g.cell_i(c), j = g.cell_j(c);
    out.push_back({i, j});
    out.push_back({i - 1, j});
    out.push_back({i, j - 1});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool on_boundary_edge(const GridSpec& g, const Eigen::Vector2d& x) {
  const double h = g.h(), tol = 1e-9 * h;
  for (const auto& e : g.boundary_edges()) {
    const double i = g.cell_i(e.cell), j = g.cell_j(e.cell);
    const double lo_x = i * h, hi_x = (i + 1) * h, lo_y = j * h, hi_y = (j + 1) * h;
    const bool along_y = x.y() >= lo_y - tol && x.y() <= hi_y + tol;
    const bool along_x = x.x() >= lo_x - tol && x.x() <= hi_x + tol;
    switch (e.dir) {
      case Direction::PosX: if (std::abs(x.x() - hi_x) <= tol && along_y) return true; break;
      case Direction::NegX: if (std::abs(x.x() - lo_x) <= tol && along_y) return true; break;
      case Direction::PosY: if (std::abs(x.y() - hi_y) <= tol && along_x) return true; break;
      case Direction::NegY: if (std::abs(x.y() - lo_y) <= tol && along_x) return true; break;
    }
  }
  return false;
}

}  // namespace

double psi_perimeter_plane(const CellMask& W, const ProblemSpec& spec) {
  require_region(*spec.grid(), W);
  return plane_total(PlaneTerms(spec, W), *spec.grid());
}

BarrierReport barrier_probe(const ProblemSpec& spec, const Eigen::Vector2d& x0, double eps, const AnnealConfig& anneal) {
  const GridSpec& g = *spec.grid();
  if (!(eps > 0.0)) throw LevelSetError("barrier_probe needs eps > 0");
  if (!on_boundary_edge(g, x0)) throw LevelSetError("barrier_probe: x0 is not on the boundary of the mask");

  std::vector<Index> free;
  for (Index c = 0; c < g.cell_count(); ++c)
    if ((g.center(c) - x0).norm() < eps) free.push_back(c);
  // Closest cells first; the sub-window check uses a prefix.
  std::stable_sort(free.begin(), free.end(),
                   [&](Index p, Index q) { return (g.center(p) - x0).norm() < (g.center(q) - x0).norm(); });

  PlaneTerms terms(spec, full_region(g));
  BarrierReport r;
  r.free_cells = static_cast<Index>(free.size());
  r.omega_value = plane_total(terms, g);

  // Exhaustive minimization over a subset of the free cells, others as they are.
  // Ties keep the larger set.
  auto enumerate = [&](const std::vector<Index>& cells) {
    const auto closure = plane_closure(g, cells);
    auto local = [&] {
      double s = 0.0;
      for (const auto& p : closure) s += terms.term(p[0], p[1]);
      return s;
    };
    const std::uint32_t n = static_cast<std::uint32_t>(cells.size());
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_bits = 0;
    int best_count = -1;
    for (std::uint32_t bits = 0; bits < (1u << n); ++bits) {
      for (std::uint32_t k = 0; k < n; ++k) terms.set(cells[k], (bits >> k) & 1u);
      const double val = local();
      const int count = __builtin_popcount(bits);
      if (val < best - 1e-13 * (1.0 + std::abs(best)) || (std::abs(val - best) <= 1e-13 * (1.0 + std::abs(best)) && count > best_count)) {
        best = val;
        best_bits = bits;
        best_count = count;
      }
    }
    for (std::uint32_t k = 0; k < n; ++k) terms.set(cells[k], (best_bits >> k) & 1u);
  };

  if (free.size() <= 16) {
    enumerate(free);
  } else {
    r.exhaustive = false;
    // Simulated annealing over single-cell flips, geometric cooling from T0
    // (the largest single-flip change from Omega) to T0 * t_final_ratio.
    std::mt19937_64 rng(anneal.seed);
    auto flip_delta = [&](Index c) {
      const auto closure = plane_closure(g, {c});
      double before = 0.0, after = 0.0;
      for (const auto& p : closure) before += terms.term(p[0], p[1]);
      const bool was = terms.set_mask()[static_cast<std::size_t>(c)];
      terms.set(c, !was);
      for (const auto& p : closure) after += terms.term(p[0], p[1]);
      terms.set(c, was);
      return after - before;
    };
    double t0 = 0.0;
    for (Index c : free) t0 = std::max(t0, std::abs(flip_delta(c)));
    if (!(t0 > 0.0)) t0 = g.h();
    const std::int64_t proposals = static_cast<std::int64_t>(anneal.sweeps_per_cell) * static_cast<std::int64_t>(free.size());
    std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double current = plane_total(terms, g), best = current;
    CellMask best_mask = terms.set_mask();
    for (std::int64_t k = 0; k < proposals; ++k) {
      const double temp = t0 * std::pow(anneal.t_final_ratio, static_cast<double>(k) / static_cast<double>(proposals));
      const Index c = free[pick(rng)];
      const double d = flip_delta(c);
      if (d <= 0.0 || unit(rng) < std::exp(-d / temp)) {
        terms.set(c, !terms.set_mask()[static_cast<std::size_t>(c)]);
        current += d;
        if (current < best) {
          best = current;
          best_mask = terms.set_mask();
        }
      }
    }
    for (Index c : free) terms.set(c, best_mask[static_cast<std::size_t>(c)]);
    enumerate(std::vector<Index>(free.begin(), free.begin() + 16));
  }

  r.V = terms.set_mask();
  r.value = plane_total(terms, g);
  r.density_boundary = density_boundary(LevelSet(spec.grid(), r.V), 1);
  const auto& edges = g.boundary_edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Index c = edges[e].cell;
    Eigen::Vector2d mid = g.center(c);
    mid[axis_of(edges[e].dir)] += 0.5 * sign_of(edges[e].dir) * g.h();
    if ((mid - x0).norm() < eps - g.h() && r.V[static_cast<std::size_t>(c)])
      r.contact_edges.push_back(static_cast<Index>(e));
  }
  r.holds = r.contact_edges.empty();
  return r;
}

}  // namespace parea
