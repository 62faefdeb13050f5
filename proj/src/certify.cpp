#include "parea/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace parea {

const char* to_string(TheoremName n) {
  switch (n) {
    case TheoremName::DualFeasibility: return "DualFeasibility";
    case TheoremName::ZeroGap: return "ZeroGap";
    case TheoremName::Alignment: return "Alignment";
    case TheoremName::BoundaryComplementarity: return "BoundaryComplementarity";
    case TheoremName::ZeroTraceSet: return "ZeroTraceSet";
    case TheoremName::UniquenessOfDirection: return "UniquenessOfDirection";
    case TheoremName::ExistenceThreshold: return "ExistenceThreshold";
    case TheoremName::Divergent: return "Divergent";
  }
  return "?";
}

bool rederive_pass(const TheoremReport& r) {
  const auto& m = r.metrics;
  const double tol = r.tolerance;
  switch (r.name) {
    case TheoremName::DualFeasibility: {
      const double scale = 1.0 + m.at("h_l2");
      return m.at("r_norm") == 0.0 && m.at("r_div") <= tol * scale && m.at("r_trace") <= tol;
    }
    case TheoremName::ZeroGap: {
      const double scale = 1.0 + std::abs(m.at("primal"));
      const double ftol = m.at("feasibility_tol");
      return m.at("gap") <= tol * scale && m.at("gap") >= -1e-8 * scale && m.at("r_norm") == 0.0 &&
             m.at("r_div") <= ftol && m.at("r_trace") <= ftol;
    }
    case TheoremName::Alignment:
      return m.at("active_cells") == 0.0 ||
             (m.at("min_cosine") >= 1.0 - tol && m.at("min_norm_ratio") >= 1.0 - m.at("norm_tol"));
    case TheoremName::BoundaryComplementarity:
      return m.at("max_product_ratio") <= tol && m.at("max_slack_u") <= tol;
    case TheoremName::ZeroTraceSet:
      return m.at("max_slack_u") <= tol;
    case TheoremName::UniquenessOfDirection:
      return m.at("primal_spread") <= m.at("primal_tol") && m.at("max_rms_N") <= tol;
    case TheoremName::ExistenceThreshold:
      return m.at("h_norm") < 1.0 / (tol * m.at("c_omega"));
    case TheoremName::Divergent:
      return m.at("min_normalized_slope") < -tol;
  }
  return false;
}

namespace {

TheoremReport finish(TheoremReport r) {
  r.pass = rederive_pass(r);
  return r;
}

double curvature_l2(const ProblemSpec& spec) { return spec.curvature().values.norm() * spec.grid()->h(); }

TheoremReport feasibility_report(const FeasibilityResiduals& res, const ProblemSpec& spec, double tol) {
  TheoremReport r;
  r.name = TheoremName::DualFeasibility;
  r.tolerance = tol;
  r.metrics = {{"r_norm", res.r_norm}, {"r_div", res.r_div}, {"r_trace", res.r_trace}, {"h_l2", curvature_l2(spec)}};
  return finish(std::move(r));
}

}  // namespace

TheoremReport check_dual_feasibility(const VectorField& N, const ProblemSpec& spec, double tol) {
  return feasibility_report(feasibility_residuals(N, spec), spec, tol);
}

TheoremReport check_dual_feasibility(const VectorField& N, const BoundaryTrace& flux, const ProblemSpec& spec,
                                     double tol) {
  return feasibility_report(feasibility_residuals(N, flux, spec), spec, tol);
}

TheoremReport check_zero_gap(const ScalarField& u, const VectorField& N, const BoundaryTrace& flux,
                             const ProblemSpec& spec, double gap_tol, double feasibility_tol) {
  const double p = primal_energy(u, spec).total;
  const double d = dual_value(N, flux, spec);
  const auto res = feasibility_residuals(N, flux, spec);
  TheoremReport r;
  r.name = TheoremName::ZeroGap;
  r.tolerance = gap_tol;
  r.metrics = {{"primal", p},
               {"dual", d},
               {"gap", p - d},
               {"relative_gap", (p - d) / (1.0 + std::abs(p))},
               {"r_norm", res.r_norm},
               {"r_div", res.r_div},
               {"r_trace", res.r_trace},
               {"feasibility_tol", feasibility_tol}};
  return finish(std::move(r));
}

TheoremReport check_alignment(const ScalarField& u, const VectorField& N, const ProblemSpec& spec,
                              double activity_threshold, double tol, double norm_tol) {
  require_same_grid(spec.grid(), u);
  require_same_grid(spec.grid(), N);
  const TwoColumns<double> v = gradient(u).values + spec.drift().values;
  const Eigen::VectorXd vn = pointwise_norm(v);
  const Eigen::VectorXd nn = pointwise_norm(N.values);
  const Eigen::VectorXd& a = spec.weight().values;
  const double vmax = vn.size() > 0 ? vn.maxCoeff() : 0.0;
  const double cut = activity_threshold * std::max(vmax, 1.0);

  double min_cos = 1.0, min_ratio = std::numeric_limits<double>::infinity();
  Index active = 0;
  for (Index c = 0; c < vn.size(); ++c) {
    if (vn[c] <= cut) continue;
    ++active;
    const double cosine = nn[c] > 0.0 ? N.values.row(c).dot(v.row(c)) / (nn[c] * vn[c]) : 0.0;
    min_cos = std::min(min_cos, cosine);
    min_ratio = std::min(min_ratio, nn[c] / a[c]);
  }
  if (active == 0) min_ratio = 1.0;
  const double frac = vn.size() > 0 ? static_cast<double>(active) / static_cast<double>(vn.size()) : 0.0;

  TheoremReport r;
  r.name = TheoremName::Alignment;
  r.tolerance = tol;
  r.metrics = {{"min_cosine", min_cos},
               {"min_norm_ratio", min_ratio},
               {"norm_tol", norm_tol},
               {"active_cells", static_cast<double>(active)},
               {"active_fraction", frac},
               {"singular_fraction", 1.0 - frac},
               {"activity_threshold", activity_threshold},
               {"degenerate", active == 0 ? 1.0 : 0.0}};
  return finish(std::move(r));
}

namespace {

struct EdgeScan {
  double max_product_ratio = 0.0;
  double max_slack_u = 0.0;
  Index slack_edges = 0;
  double displayed_residual = 0.0;
  double proof_residual = 0.0;
};

EdgeScan scan_edges(const ScalarField& u, const BoundaryTrace& flux, const ProblemSpec& spec, double margin) {
  if (spec.neumann()) throw CertificationError("boundary complementarity needs a relaxed Dirichlet problem");
  require_same_grid(spec.grid(), u);
  require_same_grid(spec.grid(), flux);
  const auto& edges = spec.grid()->boundary_edges();
  const auto& ae = spec.edge_weight();
  EdgeScan s;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Index k = static_cast<Index>(e);
    const double uv = u[edges[e].cell], t = flux.values[k], a = ae[k];
    s.max_product_ratio = std::max(s.max_product_ratio, std::abs(uv) * (a - std::abs(t)) / a);
    if (std::abs(t) <= (1.0 - margin) * a) {
      ++s.slack_edges;
      s.max_slack_u = std::max(s.max_slack_u, std::abs(uv));
    }
    s.displayed_residual = std::max(s.displayed_residual, std::abs(uv * t - a * std::abs(uv)));
    s.proof_residual = std::max(s.proof_residual, std::abs(uv * t + a * std::abs(uv)));
  }
  return s;
}

}  // namespace

TheoremReport check_boundary_complementarity(const ScalarField& u, const BoundaryTrace& flux, const ProblemSpec& spec,
                                             double tol, double margin) {
  const EdgeScan s = scan_edges(u, flux, spec, margin);
  TheoremReport r;
  r.name = TheoremName::BoundaryComplementarity;
  r.tolerance = tol;
  r.metrics = {{"max_product_ratio", s.max_product_ratio},
               {"max_slack_u", s.max_slack_u},
               {"slack_edges", static_cast<double>(s.slack_edges)},
               {"edges", static_cast<double>(spec.grid()->edge_count())},
               {"margin", margin},
               {"displayed_sign_residual", s.displayed_residual},
               {"proof_sign_residual", s.proof_residual}};
  return finish(std::move(r));
}

TheoremReport check_zero_trace_set(const ScalarField& u, const BoundaryTrace& flux, const ProblemSpec& spec,
                                   double tol, double margin) {
  const EdgeScan s = scan_edges(u, flux, spec, margin);
  TheoremReport r;
  r.name = TheoremName::ZeroTraceSet;
  r.tolerance = tol;
  r.metrics = {{"max_slack_u", s.max_slack_u},
               {"slack_edges", static_cast<double>(s.slack_edges)},
               {"margin", margin}};
  return finish(std::move(r));
}

TheoremReport check_uniqueness_of_direction(const ProblemSpec& spec, int n_seeds, SolverConfig cfg, double rms_tol,
                                            double activity_threshold) {
  if (n_seeds < 1) throw CertificationError("check_uniqueness_of_direction: n_seeds must be positive");
  const std::uint64_t base = cfg.seed;
  cfg.init = InitKind::Random;
  std::vector<Certificate> runs;
  for (int k = 0; k < n_seeds; ++k) {
    cfg.seed = base + static_cast<std::uint64_t>(k);
    runs.push_back(solve(spec, cfg));
    if (!runs.back().converged)
      throw CertificationError("check_uniqueness_of_direction: run with seed " + std::to_string(cfg.seed) +
                               " did not converge");
  }

  const Index m = spec.grid()->cell_count();
  std::vector<char> common(static_cast<std::size_t>(m), 1);
  for (const auto& run : runs) {
    const Eigen::VectorXd vn = pointwise_norm((gradient(run.u).values + spec.drift().values).eval());
    const double cut = activity_threshold * std::max(vn.maxCoeff(), 1.0);
    for (Index c = 0; c < m; ++c)
      if (vn[c] <= cut) common[static_cast<std::size_t>(c)] = 0;
  }
  const Index n_common = std::count(common.begin(), common.end(), char{1});

  double lo = std::numeric_limits<double>::infinity(), hi = -lo, worst_rms = 0.0, scale = 0.0;
  for (const auto& run : runs) {
    lo = std::min(lo, run.primal_value);
    hi = std::max(hi, run.primal_value);
    scale = std::max(scale, std::abs(run.primal_value));
  }
  for (std::size_t p = 0; p < runs.size(); ++p) {
    for (std::size_t q = p + 1; q < runs.size(); ++q) {
      double s = 0.0;
      for (Index c = 0; c < m; ++c)
        if (common[static_cast<std::size_t>(c)]) s += (runs[p].N.values.row(c) - runs[q].N.values.row(c)).squaredNorm();
      if (n_common > 0) worst_rms = std::max(worst_rms, std::sqrt(s / static_cast<double>(n_common)));
    }
  }

  TheoremReport r;
  r.name = TheoremName::UniquenessOfDirection;
  r.tolerance = rms_tol;
  r.metrics = {{"runs", static_cast<double>(n_seeds)},
               {"primal_spread", hi - lo},
               {"primal_tol", 2.0 * cfg.gap_tol * (1.0 + scale)},
               {"max_rms_N", worst_rms},
               {"common_active_cells", static_cast<double>(n_common)}};
  return finish(std::move(r));
}

TheoremReport check_existence_threshold(const ProblemSpec& spec) {
  const ThresholdReport t = existence_threshold(spec);
  TheoremReport r;
  r.name = TheoremName::ExistenceThreshold;
  r.tolerance = kPoincareSafety;
  r.metrics = {{"c_omega", t.c_omega}, {"h_norm", t.h_norm}, {"threshold", t.threshold}};
  return finish(std::move(r));
}

namespace {

// Tracks P_a(E) = sum a |D chi_E| h^2 and sum_E Htilde h^2 as cells join E.
class StepSweep {
 public:
  StepSweep(const ProblemSpec& spec)
      : g_(*spec.grid()),
        a_(spec.weight().values),
        h_tilde_(spec.divergence_target().values),
        chi_(Eigen::VectorXd::Zero(g_.cell_count())) {}

  void add(Index c) {
    const Index touched[3] = {c, g_.backward(c, 0), g_.backward(c, 1)};
    for (Index t : touched)
      if (t >= 0) perimeter_ -= cell_term(t);
    chi_[c] = 1.0;
    for (Index t : touched)
      if (t >= 0) perimeter_ += cell_term(t);
    mass_ += h_tilde_[c] * g_.h() * g_.h();
  }
  double perimeter() const { return perimeter_; }
  double mass() const { return mass_; }

 private:
  double cell_term(Index c) const {
    double s = 0.0;
    for (int ax = 0; ax < 2; ++ax) {
      const Index f = g_.forward(c, ax);
      if (f >= 0) s += (chi_[f] - chi_[c]) * (chi_[f] - chi_[c]);
    }
    return a_[c] * std::sqrt(s) * g_.h();  // a |D chi| h^2 with |D chi| = sqrt(s) / h
  }

  const GridSpec& g_;
  const Eigen::VectorXd& a_;
  Eigen::VectorXd h_tilde_;
  Eigen::VectorXd chi_;
  double perimeter_ = 0.0;
  double mass_ = 0.0;
};

}  // namespace

TheoremReport check_divergence_below(const ProblemSpec& spec, double tol) {
  if (!spec.neumann()) throw CertificationError("check_divergence_below needs a Neumann problem");
  const GridSpec& g = *spec.grid();
  const Index m = g.cell_count();

  std::vector<std::vector<Index>> orders;
  for (int ax = 0; ax < 2; ++ax) {
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index p, Index q) {
      return (ax == 0 ? g.cell_i(p) : g.cell_j(p)) < (ax == 0 ? g.cell_i(q) : g.cell_j(q));
    });
    orders.push_back(std::move(order));
  }
  if (m > 2) {
    const Eigen::VectorXd phi = second_neumann_eigenvector(g);
    std::vector<Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index p, Index q) { return phi[p] > phi[q]; });
    orders.push_back(std::move(order));
  }

  double best = std::numeric_limits<double>::infinity(), best_slope = 0.0;
  Index probes = 0;
  for (const auto& order : orders) {
    StepSweep sweep(spec);
    for (Index k = 0; k + 1 < m; ++k) {
      sweep.add(order[static_cast<std::size_t>(k)]);
      const double p = sweep.perimeter();
      if (!(p > 0.0)) continue;
      for (double sign : {1.0, -1.0}) {
        ++probes;
        const double slope = p + sign * sweep.mass();
        if (slope / p < best) {
          best = slope / p;
          best_slope = slope;
        }
      }
    }
  }
  TheoremReport r;
  r.name = TheoremName::Divergent;
  r.tolerance = tol;
  r.metrics = {{"min_normalized_slope", std::isfinite(best) ? best : 0.0},
               {"min_slope", best_slope},
               {"probes", static_cast<double>(probes)}};
  return finish(std::move(r));
}

bool has_feasible_dual(const ProblemSpec& spec) {
  try {
    DualPolisher polisher(spec);
    const auto res = polisher.polish(VectorField(spec.grid()), BoundaryTrace(spec.grid()));
    return res.residuals.r_norm == 0.0 && res.residuals.r_div <= 1e-8 * (1.0 + curvature_l2(spec)) &&
           res.residuals.r_trace <= 1e-8;
  } catch (const InfeasibleDual&) {
    return false;
  }
}

ThresholdSearch locate_threshold(const std::function<ProblemSpec(double)>& family, double lo, double hi,
                                 double rel_tol) {
  if (!(lo < hi)) throw CertificationError("locate_threshold: need lo < hi");
  if (!has_feasible_dual(family(lo))) throw CertificationError("locate_threshold: lower end is not certified bounded");
  if (!check_divergence_below(family(hi)).pass)
    throw CertificationError("locate_threshold: upper end is not certified unbounded");
  ThresholdSearch s;
  while (hi - lo > rel_tol * std::abs(hi)) {
    const double mid = 0.5 * (lo + hi);
    const ProblemSpec spec = family(mid);
    ++s.steps;
    if (check_divergence_below(spec).pass) {
      hi = mid;
    } else if (has_feasible_dual(spec)) {
      lo = mid;
    } else {
      s.resolved = false;
      break;
    }
  }
  s.bounded = lo;
  s.unbounded = hi;
  s.estimate = 0.5 * (lo + hi);
  return s;
}

}  // namespace parea
