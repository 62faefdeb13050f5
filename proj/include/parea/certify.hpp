// Machine-checkable verdicts on primal/dual pairs.
#pragma once

#include "parea/pdhg.hpp"

#include <functional>
#include <map>
#include <stdexcept>
#include <string>

namespace parea {

class CertificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TheoremName {
  DualFeasibility,
  ZeroGap,
  Alignment,
  BoundaryComplementarity,
  ZeroTraceSet,
  UniquenessOfDirection,
  ExistenceThreshold,
  Divergent
};

const char* to_string(TheoremName n);

struct TheoremReport {
  TheoremName name = TheoremName::DualFeasibility;
  bool pass = false;
  std::map<std::string, double> metrics;
  double tolerance = 0.0;
};

/// Recomputes the verdict of a report from its metrics and tolerance.
bool rederive_pass(const TheoremReport& r);

/// r_norm = 0, r_div <= tol and, for Neumann problems, r_trace <= tol. The
/// first form reads the boundary flux off N; the second takes it explicitly.
TheoremReport check_dual_feasibility(const VectorField& N, const ProblemSpec& spec, double tol = 1e-3);
TheoremReport check_dual_feasibility(const VectorField& N, const BoundaryTrace& flux, const ProblemSpec& spec,
                                     double tol = 1e-3);

/// Relative gap of (u, N, flux) recomputed from the fields, with the dual
/// residuals held to feasibility_tol.
TheoremReport check_zero_gap(const ScalarField& u, const VectorField& N, const BoundaryTrace& flux,
                             const ProblemSpec& spec, double gap_tol = 1e-3, double feasibility_tol = 1e-8);

/// On active cells (|Du + F| > activity_threshold * max(max |Du + F|, 1)):
/// cos(N, Du + F) >= 1 - tol and |N| / a >= 1 - norm_tol.
TheoremReport check_alignment(const ScalarField& u, const VectorField& N, const ProblemSpec& spec,
                              double activity_threshold = 0.01, double tol = 1e-3, double norm_tol = 1e-2);

/// Relaxed Dirichlet pair with f = 0 (reduce first). Per edge
/// |u| (a - |[N, nu]|) <= tol a, and |u| <= tol where |[N, nu]| <= (1 - margin) a.
TheoremReport check_boundary_complementarity(const ScalarField& u, const BoundaryTrace& flux, const ProblemSpec& spec,
                                             double tol = 1e-3, double margin = 0.1);

/// The second half of the above on its own: u = 0 where the flux is slack.
TheoremReport check_zero_trace_set(const ScalarField& u, const BoundaryTrace& flux, const ProblemSpec& spec,
                                   double tol = 1e-3, double margin = 0.1);

/// Solves from n_seeds random initializations (seeds cfg.seed, cfg.seed + 1, ...)
/// and compares primal values (within 2 gap_tol (1 + |primal|)) and N (RMS
/// difference within rms_tol on commonly active cells). Throws
/// CertificationError if a run does not converge.
TheoremReport check_uniqueness_of_direction(const ProblemSpec& spec, int n_seeds, SolverConfig cfg,
                                            double rms_tol = 1e-2, double activity_threshold = 0.01);

TheoremReport check_existence_threshold(const ProblemSpec& spec);

/// Neumann only. Energy slope lim I(t u)/t = sum a |Du| h^2 + sum H u h^2 over
/// the probes u = +-(chi_E - |E|/|Omega|), E a coordinate half-space or a
/// super-level set of the second Neumann eigenfunction. Passes (unboundedness
/// confirmed) iff some probe has slope / TV_a(u) < -tol.
TheoremReport check_divergence_below(const ProblemSpec& spec, double tol = 1e-9);

/// A strictly admissible dual (|b| <= a, div b = Htilde, zero trace for
/// Neumann) exists for the data; proves the energy bounded below.
bool has_feasible_dual(const ProblemSpec& spec);

struct ThresholdSearch {
  double bounded = 0.0;    // largest c with a feasible dual found
  double unbounded = 0.0;  // smallest c with a descending probe found
  double estimate = 0.0;   // midpoint of the final bracket
  int steps = 0;
  bool resolved = true;    // false if some midpoint was certified neither way
};

/// Bisection over a one-parameter family of Neumann problems for the edge of
/// boundedness. lo must be certified bounded, hi certified unbounded.
ThresholdSearch locate_threshold(const std::function<ProblemSpec(double)>& family, double lo, double hi,
                                 double rel_tol = 1e-3);

}  // namespace parea
