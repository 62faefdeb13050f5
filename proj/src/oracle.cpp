#include "parea/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace parea {

double smoothing_width(const ProblemSpec& spec) {
  const double h = spec.grid()->h();
  double w = spec.weight().values.sum() * h * h;
  if (!spec.neumann()) w += spec.edge_weight().sum() * h;
  return w;
}

double smoothed_energy(const ProblemSpec& spec, const Eigen::VectorXd& u, double eps, Eigen::VectorXd* grad) {
  const GridSpec& g = *spec.grid();
  const double h = g.h(), h2 = h * h, inv_h = 1.0 / h, e2 = eps * eps;
  const Index m = g.cell_count();
  const auto& a = spec.weight().values;
  const auto& drift = spec.drift().values;
  const auto& curv = spec.curvature().values;
  if (grad) grad->setZero(m);

  double s = 0.0;
  for (Index c = 0; c < m; ++c) {
    const int i = g.cell_i(c), j = g.cell_j(c);
    const Index east = g.index(i + 1, j), north = g.index(i, j + 1);
    const double px = (east >= 0 ? (u[east] - u[c]) * inv_h : 0.0) + drift(c, 0);
    const double py = (north >= 0 ? (u[north] - u[c]) * inv_h : 0.0) + drift(c, 1);
    const double rho = std::sqrt(px * px + py * py + e2);
    s += a[c] * rho * h2 + curv[c] * u[c] * h2;
    if (!grad) continue;
    const double k = a[c] * h2 * inv_h / rho;
    if (east >= 0) {
      (*grad)[east] += k * px;
      (*grad)[c] -= k * px;
    }
    if (north >= 0) {
      (*grad)[north] += k * py;
      (*grad)[c] -= k * py;
    }
    (*grad)[c] += curv[c] * h2;
  }
  if (!spec.neumann()) {
    const auto& edges = g.boundary_edges();
    const auto& f = spec.boundary_data().values;
    const auto& ae = spec.edge_weight();
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const Index k = static_cast<Index>(e), c = edges[e].cell;
      const double d = u[c] - f[k];
      const double rho = std::sqrt(d * d + e2);
      s += ae[k] * rho * h;
      if (grad) (*grad)[c] += ae[k] * h * d / rho;
    }
  }
  return s;
}

namespace {

struct Minimized {
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

// Polak-Ribiere+ conjugate gradients. The line search accepts Armijo points
// and refines them by safeguarded secant steps on the directional derivative
// until |phi'| <= 0.1 |phi'(0)|. Gradients are taken in the h^2-weighted L2
// metric; for Neumann problems they are projected onto mean-zero fields so u
// stays mean-zero.
Minimized minimize(const ProblemSpec& spec, double eps, const OracleConfig& cfg, Eigen::VectorXd& u) {
  const double h2 = spec.grid()->h() * spec.grid()->h();
  const bool neumann = spec.neumann();
  auto l2_gradient = [&](const Eigen::VectorXd& x, Eigen::VectorXd& gr) {
    const double v = smoothed_energy(spec, x, eps, &gr);
    gr /= h2;
    if (neumann) gr.array() -= gr.mean();
    return v;
  };
  auto l2_norm = [&](const Eigen::VectorXd& v) { return std::sqrt(v.squaredNorm() * h2); };

  Eigen::VectorXd gr, dir, trial, trial_gr, best_u, best_gr;
  double value = l2_gradient(u, gr);
  dir = -gr;
  double alpha = 1.0;
  Minimized out;
  int since_restart = 0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    out.grad_norm = l2_norm(gr);
    out.iterations = it;
    if (out.grad_norm <= cfg.descent_tol) break;

    double slope = dir.dot(gr) * h2;
    if (slope >= 0.0) {
      dir = -gr;
      slope = -gr.squaredNorm() * h2;
      since_restart = 0;
    }

    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double d_lo = slope, d_hi = 0.0;
    double best_v = value;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      trial = u + alpha * dir;
      const double v = l2_gradient(trial, trial_gr);
      const double d = dir.dot(trial_gr) * h2;
      const bool armijo = v <= value + 1e-4 * alpha * slope;
      if (armijo && v < best_v) {
        best_v = v;
        best_u = trial;
        best_gr = trial_gr;
        accepted = true;
      }
      if (armijo && std::abs(d) <= 0.1 * std::abs(slope)) break;
      if (!armijo || d > 0.0) {
        hi = alpha;
        d_hi = armijo ? d : 0.0;
      } else {
        lo = alpha;
        d_lo = d;
      }
      if (std::isinf(hi)) {
        const double guess = d_lo < 0.0 && d < slope ? alpha * slope / (slope - d) : 4.0 * alpha;
        alpha = std::clamp(guess, 2.0 * alpha, 10.0 * alpha);
      } else {
        const double width = hi - lo;
        double guess = lo + 0.5 * width;
        if (d_hi > 0.0 && d_lo < 0.0) guess = lo + width * (-d_lo) / (d_hi - d_lo);
        alpha = std::clamp(guess, lo + 0.1 * width, hi - 0.1 * width);
      }
      if (alpha <= 1e-300) break;
    }

    if (!accepted) {
      if (since_restart == 0) {
        // Steepest descent already: the energy no longer resolves the step.
        if (out.grad_norm <= 1e3 * cfg.descent_tol) break;
        throw OracleError("oracle: descent stagnated at eps = " + std::to_string(eps) + " with gradient norm " +
                          std::to_string(out.grad_norm));
      }
      dir = -gr;
      since_restart = 0;
      alpha = 1.0;
      continue;
    }
    alpha = (best_u - u).norm() / dir.norm();
    u = best_u;
    if (neumann) u.array() -= u.mean();
    value = best_v;
    ++since_restart;
    if (since_restart >= cfg.restart_every) {
      dir = -best_gr;
      since_restart = 0;
    } else {
      const double beta = std::max(0.0, best_gr.dot(best_gr - gr) / gr.squaredNorm());
      const double old_norm = dir.norm();
      dir = -best_gr + beta * dir;
      alpha *= old_norm / dir.norm();  // same step length as before
    }
    gr = best_gr;
    out.iterations = it + 1;
  }
  out.value = smoothed_energy(spec, u, eps);
  out.grad_norm = l2_norm(gr);
  return out;
}

}  // namespace

OracleReport oracle_value(const ProblemSpec& spec, const OracleConfig& cfg) {
  if (cfg.epsilons.empty()) throw OracleError("oracle: eps list is empty");
  for (std::size_t k = 0; k < cfg.epsilons.size(); ++k) {
    if (!(cfg.epsilons[k] > 0.0)) throw OracleError("oracle: eps must be positive");
    if (k > 0 && !(cfg.epsilons[k] < cfg.epsilons[k - 1])) throw OracleError("oracle: eps list must decrease strictly");
  }
  if (!(cfg.descent_tol > 0.0) || cfg.max_iters < 1 || cfg.restart_every < 1)
    throw OracleError("oracle: descent_tol, max_iters and restart_every must be positive");

  const double width = smoothing_width(spec);
  OracleReport rep;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(spec.grid()->cell_count());
  for (double eps : cfg.epsilons) {
    const Minimized r = minimize(spec, eps, cfg, u);  // warm start from the previous eps
    OracleStep s;
    s.eps = eps;
    s.value = r.value;
    s.grad_norm = r.grad_norm;
    s.iterations = r.iterations;
    s.converged = r.grad_norm <= cfg.descent_tol;
    s.bracket_hi = r.value;
    s.bracket_lo = r.value - eps * width;
    rep.steps.push_back(s);
  }
  for (std::size_t k = 1; k < rep.steps.size(); ++k)
    if (rep.steps[k].value > rep.steps[k - 1].value) rep.monotone = false;

  const std::size_t n = rep.steps.size();
  if (n == 1) {
    rep.value = rep.steps[0].value;
  } else {
    const OracleStep& p = rep.steps[n - 2];
    const OracleStep& q = rep.steps[n - 1];
    const double slope = (p.value - q.value) / (p.eps - q.eps);
    rep.value = q.value - slope * q.eps;
    for (std::size_t k = 0; k + 2 < n; ++k)
      rep.fit_residual = std::max(rep.fit_residual, std::abs(rep.steps[k].value - (rep.value + slope * rep.steps[k].eps)));
  }
  rep.bracket_width = cfg.epsilons.back() * width;
  rep.u = ScalarField(spec.grid(), u);
  return rep;
}

}  // namespace parea
