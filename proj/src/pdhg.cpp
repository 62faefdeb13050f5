#include "parea/pdhg.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <chrono>
#include <cmath>
#include <random>
#include <string>

namespace parea {

namespace {

// K^T K for the saddle operator: D^T D, plus E^T E / h^2 for relaxed Dirichlet.
SparseMatrix normal_matrix(const ProblemSpec& spec, const SparseMatrix& d, const SparseMatrix& e) {
  SparseMatrix n = SparseMatrix(d.transpose()) * d;
  if (!spec.neumann()) {
    const double h = spec.grid()->h();
    n += SparseMatrix(e.transpose()) * e * (1.0 / (h * h));
  }
  return n;
}

void project_ball(TwoColumns<double>& b, const Eigen::VectorXd& radius) {
  for (Index c = 0; c < b.rows(); ++c) {
    const double n = std::hypot(b(c, 0), b(c, 1));
    if (n > radius[c]) {
      const double s = radius[c] / n;
      b(c, 0) *= s;
      b(c, 1) *= s;
    }
  }
}

void clamp_box(Eigen::VectorXd& g, const Eigen::VectorXd& radius) {
  g = g.cwiseMax(-radius).cwiseMin(radius);
}

// Ball projection that never leaves |b| > a through rounding.
void enforce_ball(TwoColumns<double>& b, const Eigen::VectorXd& radius) {
  for (Index c = 0; c < b.rows(); ++c) {
    double n = std::hypot(b(c, 0), b(c, 1));
    while (n > radius[c]) {
      const double s = radius[c] / n * (1.0 - 4e-16);
      b(c, 0) *= s;
      b(c, 1) *= s;
      n = std::hypot(b(c, 0), b(c, 1));
    }
  }
}

double worst_ratio(const TwoColumns<double>& b, const Eigen::VectorXd& a, const Eigen::VectorXd& t,
                   const Eigen::VectorXd& a_edge) {
  double worst = 0.0;
  for (Index c = 0; c < b.rows(); ++c) worst = std::max(worst, std::hypot(b(c, 0), b(c, 1)) / a[c]);
  for (Index e = 0; e < t.size(); ++e) worst = std::max(worst, std::abs(t[e]) / a_edge[e]);
  return worst;
}

}  // namespace

double saddle_operator_norm(const ProblemSpec& spec) {
  const GridSpec& g = *spec.grid();
  try {
    return std::sqrt(std::max(0.0, largest_eigenvalue(normal_matrix(spec, gradient_matrix(g), edge_matrix(g)))));
  } catch (const std::runtime_error& e) {
    throw SolverError(std::string("saddle operator norm: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

DualPolisher::DualPolisher(const ProblemSpec& spec)
    : spec_(&spec),
      neumann_(spec.neumann()),
      h_(spec.grid()->h()),
      d_(gradient_matrix(*spec.grid())),
      e_(edge_matrix(*spec.grid())) {
  const SparseMatrix full = normal_matrix(spec, d_, e_);
  const Index m = full.rows();
  normal_ = neumann_ && m > 1 ? SparseMatrix(full.bottomRightCorner(m - 1, m - 1)) : full;
  target_ = spec.divergence_target().values;

  Eigen::VectorXd y = solve_normal(target_, nullptr);
  apply_transpose(y, interior_n_, interior_t_);
  slack_ = 1.0 - worst_ratio(unflatten(interior_n_), spec.weight().values, interior_t_, spec.edge_weight());
}

Eigen::VectorXd DualPolisher::constraint(const Eigen::VectorXd& n_flat, const Eigen::VectorXd& t) const {
  Eigen::VectorXd c = -(d_.transpose() * n_flat);
  if (!neumann_) c += (e_.transpose() * t) / h_;
  return c;
}

void DualPolisher::apply_transpose(const Eigen::VectorXd& y, Eigen::VectorXd& dn, Eigen::VectorXd& dt) const {
  dn = -(d_ * y);
  if (neumann_)
    dt = Eigen::VectorXd::Zero(e_.rows());
  else
    dt = (e_ * y) / h_;
}

Eigen::VectorXd DualPolisher::solve_normal(const Eigen::VectorXd& rhs, Eigen::VectorXd* guess) {
  const Index m = rhs.size();
  if (rhs.squaredNorm() == 0.0) return Eigen::VectorXd::Zero(m);
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(1e-10);
  cg.setMaxIterations(100000);
  cg.compute(normal_);
  const bool pinned = neumann_ && m > 1;
  const Eigen::VectorXd sub_rhs = pinned ? Eigen::VectorXd(rhs.tail(m - 1)) : rhs;
  Eigen::VectorXd sub;
  if (guess && guess->size() == sub_rhs.size())
    sub = cg.solveWithGuess(sub_rhs, *guess);
  else
    sub = cg.solve(sub_rhs);
  if (cg.info() != Eigen::Success) {
    const double rel = (normal_ * sub - sub_rhs).norm() / sub_rhs.norm();
    if (rel > 1e-8) throw SolverError("dual_polish: conjugate gradients failed (relative residual " + std::to_string(rel) + ")");
  }
  if (guess) *guess = sub;
  if (!pinned) return sub;
  Eigen::VectorXd y(m);
  y[0] = 0.0;
  y.tail(m - 1) = sub;
  return y;
}

DualPolisher::Result DualPolisher::polish(const VectorField& N, const BoundaryTrace& flux) {
  const ProblemSpec& spec = *spec_;
  const Eigen::VectorXd& a = spec.weight().values;
  const Eigen::VectorXd& a_edge = spec.edge_weight();

  Eigen::VectorXd n = flatten(N.values);
  Eigen::VectorXd t = neumann_ ? Eigen::VectorXd::Zero(flux.size()) : flux.values;

  Eigen::VectorXd dn, dt;
  apply_transpose(solve_normal(target_ - constraint(n, t), &guess_), dn, dt);
  n += dn;
  t += dt;

  Result out;
  const double ratio = worst_ratio(unflatten(n), a, t, a_edge);
  if (ratio > 1.0) {
    const double eta = ratio - 1.0;
    if (slack_ > 0.0) {
      out.mix = slack_ / (eta + slack_);
      n = out.mix * n + (1.0 - out.mix) * interior_n_;
      t = out.mix * t + (1.0 - out.mix) * interior_t_;
    } else {
      // Alternating projections between the ball and the affine constraint set.
      bool ok = false;
      for (int it = 0; it < 2000 && !ok; ++it) {
        TwoColumns<double> nb = unflatten(n);
        project_ball(nb, a);
        n = flatten(nb);
        clamp_box(t, a_edge);
        apply_transpose(solve_normal(target_ - constraint(n, t), &guess_), dn, dt);
        n += dn;
        t += dt;
        ok = worst_ratio(unflatten(n), a, t, a_edge) <= 1.0 + 1e-12;
      }
      if (!ok) throw InfeasibleDual("dual_polish: no dual field satisfies |N| <= a with the divergence constraint");
    }
  }

  TwoColumns<double> nb = unflatten(n);
  enforce_ball(nb, a);
  if (!neumann_) {
    for (Index e = 0; e < t.size(); ++e)
      if (std::abs(t[e]) > a_edge[e]) t[e] = std::copysign(a_edge[e], t[e]);
  }
  out.N = VectorField(spec.grid(), std::move(nb));
  out.flux = BoundaryTrace(spec.grid(), std::move(t));
  out.dual_value = dual_value(out.N, out.flux, spec);
  out.residuals = feasibility_residuals(out.N, out.flux, spec);
  return out;
}

Certificate dual_polish(const Certificate& cert, const ProblemSpec& spec) {
  DualPolisher polisher(spec);
  auto res = polisher.polish(cert.N, cert.flux);
  Certificate out = cert;
  out.N = std::move(res.N);
  out.flux = std::move(res.flux);
  out.dual_value = res.dual_value;
  out.residuals = res.residuals;
  out.gap = out.primal_value - out.dual_value;
  out.polished = true;
  return out;
}

double duality_gap(const ScalarField& u, const VectorField& b, const ProblemSpec& spec) {
  const auto r = feasibility_residuals(b, spec);
  if (r.r_norm > 0.0) throw SolverError("duality_gap: dual field violates |b| <= a");
  return primal_energy(u, spec).total - dual_value(b, spec);
}

double duality_gap(const ScalarField& u, const VectorField& b, const BoundaryTrace& t, const ProblemSpec& spec) {
  const auto r = feasibility_residuals(b, t, spec);
  if (r.r_norm > 0.0) throw SolverError("duality_gap: dual field violates the pointwise bound");
  return primal_energy(u, spec).total - dual_value(b, t, spec);
}

// ---------------------------------------------------------------------------

Certificate solve(const ProblemSpec& spec, const SolverConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  if (!(cfg.gap_tol > 0.0)) throw SolverError("gap_tol must be positive");
  if (cfg.max_iters < 1 || cfg.check_every < 1) throw SolverError("max_iters and check_every must be positive");

  const GridPtr& gp = spec.grid();
  const GridSpec& g = *gp;
  const Index m = g.cell_count();
  const Index ne = g.edge_count();
  const double h = g.h();
  const bool dirichlet = !spec.neumann();
  const auto& edges = g.boundary_edges();
  const Eigen::VectorXd& a = spec.weight().values;
  const Eigen::VectorXd& a_edge = spec.edge_weight();
  const TwoColumns<double>& drift = spec.drift().values;
  const Eigen::VectorXd& curv = spec.curvature().values;
  const Eigen::VectorXd& f = spec.boundary_data().values;

  Certificate cert;
  cert.step_norm = 1.01 * saddle_operator_norm(spec);
  const double L = cert.step_norm;
  if (cfg.tau && cfg.sigma) {
    cert.tau = *cfg.tau;
    cert.sigma = *cfg.sigma;
  } else if (cfg.tau) {
    cert.tau = *cfg.tau;
    cert.sigma = 0.99 / (cert.tau * L * L);
  } else if (cfg.sigma) {
    cert.sigma = *cfg.sigma;
    cert.tau = 0.99 / (cert.sigma * L * L);
  } else {
    cert.tau = 0.99 / L;
    cert.sigma = 0.99 / L;
  }
  if (!(cert.tau > 0.0) || !(cert.sigma > 0.0) || cert.tau * cert.sigma * L * L >= 1.0)
    throw SolverError("step sizes violate tau * sigma * L^2 < 1 (L = " + std::to_string(L) + ")");
  const double tau = cert.tau, sigma = cert.sigma, theta = cfg.overrelaxation;

  // Initialization.
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
  TwoColumns<double> b = TwoColumns<double>::Zero(m, 2);
  Eigen::VectorXd gb = Eigen::VectorXd::Zero(ne);
  if (cfg.init == InitKind::Random) {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const double extent = std::max(g.nx(), g.ny()) * h;
    for (Index c = 0; c < m; ++c) u[c] = extent * dist(rng);
    for (Index c = 0; c < m; ++c)
      for (int ax = 0; ax < 2; ++ax) b(c, ax) = a[c] * dist(rng);
    for (Index e = 0; e < ne; ++e) gb[e] = a_edge[e] * dist(rng);
    project_ball(b, a);
  } else if (cfg.init == InitKind::Warm) {
    if (cfg.warm_u) {
      require_same_grid(gp, *cfg.warm_u);
      u = cfg.warm_u->values;
    }
    if (cfg.warm_b) {
      require_same_grid(gp, *cfg.warm_b);
      b = cfg.warm_b->values;
      project_ball(b, a);
    }
  }
  if (!dirichlet) u.array() -= u.mean();

  Eigen::VectorXd u_bar = u, u_new(m), kt(m);
  TwoColumns<double> grad(m, 2);
  Eigen::VectorXd sum_u = Eigen::VectorXd::Zero(m);
  TwoColumns<double> sum_b = TwoColumns<double>::Zero(m, 2);
  Eigen::VectorXd sum_g = Eigen::VectorXd::Zero(ne);

  DualPolisher polisher(spec);
  double best_primal = std::numeric_limits<double>::infinity();
  double best_dual = -std::numeric_limits<double>::infinity();
  const double floor = -cfg.divergence_floor * (1.0 + pointwise_norm(drift).maxCoeff() * spec.max_weight());

  auto flux_of = [&](const Eigen::VectorXd& g_mult) { return BoundaryTrace(gp, -g_mult); };

  int k = 0;
  for (k = 1; k <= cfg.max_iters; ++k) {
    // Dual ascent and projection onto |b| <= a (and |g| <= a on edges).
    apply_gradient(g, u_bar, grad);
    b += sigma * (grad + drift);
    project_ball(b, a);
    if (dirichlet) {
      for (Index e = 0; e < ne; ++e) gb[e] += sigma * (u_bar[edges[static_cast<std::size_t>(e)].cell] - f[e]) / h;
      clamp_box(gb, a_edge);
    }
    // Primal descent.
    apply_gradient_transpose(g, b, kt);
    if (dirichlet) add_edge_sum(g, gb, 1.0 / h, kt);
    u_new = u - tau * (kt + curv);
    if (!dirichlet) u_new.array() -= u_new.mean();
    u_bar = u_new + theta * (u_new - u);
    u.swap(u_new);

    sum_u += u;
    sum_b += b;
    sum_g += gb;

    if (k != 1 && k % cfg.check_every != 0 && k != cfg.max_iters) continue;

    const Eigen::VectorXd ue = sum_u / k;
    const TwoColumns<double> be = sum_b / k;
    const Eigen::VectorXd ge = sum_g / k;
    if (!u.allFinite() || !b.allFinite() || !gb.allFinite())
      throw SolverError("solve: non-finite iterate at iteration " + std::to_string(k) + " (tau = " +
                        std::to_string(tau) + ", sigma = " + std::to_string(sigma) + ")");

    ScalarField u_erg(gp, dirichlet ? ue : Eigen::VectorXd(ue.array() - ue.mean()));
    ScalarField u_cur(gp, u);
    const double p_erg = primal_energy(u_erg, spec).total;
    const double p_cur = primal_energy(u_cur, spec).total;

    VectorField b_erg(gp, be);
    const BoundaryTrace t_erg = flux_of(ge);
    const auto raw = feasibility_residuals(b_erg, t_erg, spec);

    TracePoint tp;
    tp.iter = k;
    tp.primal = p_erg;
    tp.r_div = raw.r_div;
    tp.r_trace = raw.r_trace;

    if (std::min(p_erg, p_cur) < floor) {
      cert.diverging = true;
      best_primal = std::min(p_erg, p_cur);
      cert.u = p_erg <= p_cur ? u_erg : u_cur;
      tp.dual = std::numeric_limits<double>::quiet_NaN();
      tp.gap = std::numeric_limits<double>::infinity();
      cert.trace.push_back(tp);
      break;
    }

    if (p_erg < best_primal) {
      best_primal = p_erg;
      cert.u = u_erg;
    }
    if (p_cur < best_primal) {
      best_primal = p_cur;
      cert.u = u_cur;
    }

    try {
      auto pe = polisher.polish(b_erg, t_erg);
      tp.dual = pe.dual_value;
      if (pe.dual_value > best_dual) {
        best_dual = pe.dual_value;
        cert.N = pe.N;
        cert.flux = pe.flux;
        cert.residuals = pe.residuals;
      }
      auto pc = polisher.polish(VectorField(gp, b), flux_of(gb));
      if (pc.dual_value > best_dual) {
        best_dual = pc.dual_value;
        cert.N = pc.N;
        cert.flux = pc.flux;
        cert.residuals = pc.residuals;
      }
      cert.polished = true;
    } catch (const InfeasibleDual&) {
      tp.dual = std::numeric_limits<double>::quiet_NaN();
    }
    tp.gap = best_primal - best_dual;
    cert.trace.push_back(tp);

    if (cert.polished && tp.gap <= cfg.gap_tol * (1.0 + std::abs(best_primal)) &&
        cert.residuals.r_div <= cfg.gap_tol * (1.0 + spec.curvature().values.norm() * h)) {
      cert.converged = true;
      break;
    }
  }
  cert.iterations = std::min(k, cfg.max_iters);

  if (!cert.polished) {
    // No feasible dual was produced; report the raw ergodic field.
    cert.N = VectorField(gp, sum_b / std::max(cert.iterations, 1));
    cert.flux = flux_of(sum_g / std::max(cert.iterations, 1));
    cert.residuals = feasibility_residuals(cert.N, cert.flux, spec);
    best_dual = dual_value(cert.N, cert.flux, spec);
  }
  cert.primal_value = best_primal;
  cert.dual_value = best_dual;
  cert.gap = best_primal - best_dual;
  cert.u_last = ScalarField(gp, u);
  cert.N_last = VectorField(gp, b);
  cert.flux_last = flux_of(gb);
  cert.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cert;
}

}  // namespace parea
