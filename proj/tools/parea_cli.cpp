// Command-line front end: runs one scenario per invocation and writes its
// artifacts plus a manifest into the output directory.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration or
// command-line error, 3 internal error.

#include "parea/certify.hpp"
#include "parea/io.hpp"
#include "parea/levelset.hpp"
#include "parea/oracle.hpp"
#include "parea/pdhg.hpp"
#include "parea/scenario.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace parea;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheck = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInternal = 3;

struct Options {
  std::string scenario;
  std::string output_dir = "parea-out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string format = "csv";
  // barrier-probe overrides
  std::vector<double> x0;
  std::optional<double> eps;
};

// Collects artifacts and check outcomes, then writes the manifest.
class Run {
 public:
  Run(std::string command, const Options& opt, const Scenario* scn)
      : command_(std::move(command)), opt_(opt), scn_(scn), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(opt_.output_dir);
  }

  void write(const std::string& name, const std::string& text) {
    write_text(fs::path(opt_.output_dir) / name, text);
    artifacts_.push_back({{"path", name}, {"bytes", text.size()}, {"sha256", sha256_hex(text)}});
  }
  void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

  void field(const std::string& stem, const ScalarField& u) {
    if (opt_.format == "json")
      write_json(stem + ".json", field_json(u));
    else
      write(stem + ".csv", field_csv(u));
  }
  void field(const std::string& stem, const VectorField& b) {
    if (opt_.format == "json")
      write_json(stem + ".json", field_json(b));
    else
      write(stem + ".csv", field_csv(b));
  }
  void field(const std::string& stem, const BoundaryTrace& t) {
    if (opt_.format == "json")
      write_json(stem + ".json", field_json(t));
    else
      write(stem + ".csv", trace_csv(t));
  }

  // Timings go to the manifest only, so artifacts stay reproducible.
  void timing(const std::string& name, double seconds) { timings_[name] = seconds; }

  void check(const std::string& name, bool pass) {
    checks_[name] = pass;
    std::printf("%-48s %s\n", name.c_str(), pass ? "PASS" : "FAIL");
    all_pass_ = all_pass_ && pass;
  }

  int finish() {
    const int code = all_pass_ ? kExitOk : kExitCheck;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    Json m;
    m["format_version"] = kFormatVersion;
    m["command"] = command_;
    m["scenario"] = scn_ ? scn_->name : "";
    m["flags"] = {{"seed", opt_.seed ? Json(*opt_.seed) : Json(nullptr)},
                  {"threads", opt_.threads},
                  {"format", opt_.format}};
    m["inputs_sha256"] = sha256_hex((scn_ ? scn_->source : std::string()) + "\n" + command_ + "\n" +
                                    m["flags"].dump());
    if (scn_) m["config"] = {{"source", scn_->source}, {"solver", to_json(scn_->solver)}};
    m["versions"] = library_versions();
    m["wall_time_s"] = wall;
    if (!timings_.empty()) m["timings_s"] = timings_;
    m["artifacts"] = artifacts_;
    m["checks"] = checks_;
    m["exit_code"] = code;
    write_text(fs::path(opt_.output_dir) / "manifest.json", m.dump(2) + "\n");
    return code;
  }

 private:
  std::string command_;
  const Options& opt_;
  const Scenario* scn_;
  std::chrono::steady_clock::time_point start_;
  Json artifacts_ = Json::array();
  Json checks_ = Json::object();
  Json timings_ = Json::object();
  bool all_pass_ = true;
};

Scenario load(const Options& opt) {
  if (opt.scenario.empty()) throw ConfigError("--scenario is required");
  Scenario s = resolve_scenario(opt.scenario);
  if (opt.seed) {
    s.solver.seed = *opt.seed;
    s.anneal.seed = *opt.seed;
  }
  return s;
}

bool near(double value, double expected, double rel) { return std::abs(value - expected) <= rel * (1.0 + std::abs(expected)); }

Certificate solve_and_export(Run& run, const Scenario& s) {
  const Certificate c = solve(s.spec, s.solver);
  run.write_json("grid.json", grid_sidecar(*s.spec.grid(), {"u", "N", "flux"}));
  run.field("u", c.u);
  run.field("N", c.N);
  run.field("flux", c.flux);
  run.write("trace.csv", solver_trace_csv(c.trace));
  run.write_json("certificate.json", to_json(c, s.solver));
  run.timing("solve", c.seconds);
  std::printf("primal %.10g  dual %.10g  gap %.3g  iterations %d\n", c.primal_value, c.dual_value, c.gap,
              c.iterations);
  return c;
}

int cmd_solve(const Options& opt, BoundaryKind kind, const char* name) {
  const Scenario s = load(opt);
  if (s.spec.bc().kind != kind)
    throw ConfigError(std::string(name) + " needs a scenario with a " + to_string(kind) + " boundary; '" + s.name +
                      "' has " + to_string(s.spec.bc().kind));
  Run run(name, opt, &s);
  const Certificate c = solve_and_export(run, s);
  run.check("converged", c.converged && !c.diverging);
  if (auto it = s.expected.find("primal_value"); it != s.expected.end())
    run.check("primal_value matches expected", near(c.primal_value, it->second, 1e-3));
  return run.finish();
}

bool needs_solution(const std::string& check) {
  return check != "existence_threshold" && check != "divergence_below" && check != "uniqueness";
}

int cmd_certify(const Options& opt) {
  const Scenario s = load(opt);
  Run run("certify", opt, &s);
  const double tol = 1e-3;
  std::optional<Certificate> c;
  if (std::any_of(s.checks.begin(), s.checks.end(), needs_solution)) {
    c = solve_and_export(run, s);
    run.check("converged", c->converged && !c->diverging);
    if (auto it = s.expected.find("primal_value"); it != s.expected.end())
      run.check("primal_value matches expected", near(c->primal_value, it->second, 1e-3));
  }
  Json reports = Json::array();
  for (const auto& name : s.checks) {
    TheoremReport r;
    if (name == "dual_feasibility") {
      r = check_dual_feasibility(c->N, c->flux, s.spec, tol);
    } else if (name == "zero_gap") {
      r = check_zero_gap(c->u, c->N, c->flux, s.spec, tol);
    } else if (name == "alignment") {
      r = check_alignment(c->u, c->N, s.spec);
    } else if (name == "boundary_complementarity") {
      r = check_boundary_complementarity(c->u, c->flux, s.spec);
    } else if (name == "zero_trace_set") {
      r = check_zero_trace_set(c->u, c->flux, s.spec);
    } else if (name == "uniqueness") {
      try {
        r = check_uniqueness_of_direction(s.spec, s.uniqueness_seeds, s.solver);
      } catch (const CertificationError& e) {
        std::printf("%s\n", e.what());
        reports.push_back({{"name", "UniquenessOfDirection"}, {"pass", false}, {"error", e.what()}});
        run.check("UniquenessOfDirection", false);
        continue;
      }
    } else if (name == "existence_threshold") {
      r = check_existence_threshold(s.spec);
    } else if (name == "divergence_below") {
      r = check_divergence_below(s.spec);
    }
    reports.push_back(to_json(r));
    run.check(to_string(r.name), r.pass && rederive_pass(r) == r.pass);
  }
  run.write_json("reports.json", Json{{"format_version", kFormatVersion}, {"scenario", s.name}, {"reports", reports}});
  return run.finish();
}

int cmd_oracle(const Options& opt) {
  const Scenario s = load(opt);
  Run run("oracle", opt, &s);
  const OracleReport o = oracle_value(s.spec, s.oracle);
  run.field("oracle_u", o.u);
  const Certificate c = solve(s.spec, s.solver);
  Json j = to_json(o, s.oracle);
  j["pdhg_primal"] = c.primal_value;
  j["relative_difference"] = std::abs(o.value - c.primal_value) / std::max(1.0, std::abs(c.primal_value));
  run.write_json("oracle.json", j);
  std::printf("oracle %.10g  pdhg %.10g\n", o.value, c.primal_value);
  const OracleStep& last = o.steps.back();
  const double slack = s.solver.gap_tol * (1.0 + std::abs(c.primal_value));
  run.check("oracle monotone in eps", o.monotone);
  run.check("oracle agrees with pdhg (1e-2 rel)", j["relative_difference"].get<double>() <= 1e-2);
  run.check("eps bracket contains pdhg value",
            last.bracket_lo - slack <= c.primal_value && c.primal_value <= last.bracket_hi + slack);
  return run.finish();
}

std::vector<double> level_values(const Scenario& s, const ScalarField& u) {
  if (!s.levelset.lambdas.empty()) return s.levelset.lambdas;
  const double lo = u.values.minCoeff(), hi = u.values.maxCoeff();
  std::vector<double> out;
  for (int k = 1; k <= s.levelset.count; ++k) out.push_back(lo + (hi - lo) * k / (s.levelset.count + 1.0));
  return out;
}

// Exhaustive sweep over all interior windows, split across threads.
std::pair<int, MinimalityVerdict> window_sweep(const LevelSet& E, const Scenario& s, int threads) {
  const auto windows = interior_windows(*s.spec.grid(), s.levelset.window, s.levelset.window);
  const int parts = std::max(1, std::min<int>(threads, static_cast<int>(windows.size())));
  std::vector<std::future<std::pair<int, MinimalityVerdict>>> jobs;
  for (int p = 0; p < parts; ++p)
    jobs.push_back(std::async(std::launch::async, [&, p] {
      std::pair<int, MinimalityVerdict> acc{0, MinimalityVerdict{}};
      acc.second.margin = -std::numeric_limits<double>::infinity();
      for (std::size_t k = static_cast<std::size_t>(p); k < windows.size(); k += static_cast<std::size_t>(parts)) {
        const MinimalityVerdict v = check_minimality_exhaustive(E, s.spec, windows[k], s.solver.gap_tol);
        if (!v.pass) ++acc.first;
        if (v.margin > acc.second.margin) acc.second = v;
      }
      return acc;
    }));
  std::pair<int, MinimalityVerdict> total{0, MinimalityVerdict{}};
  total.second.margin = -std::numeric_limits<double>::infinity();
  for (auto& j : jobs) {
    const auto r = j.get();
    total.first += r.first;
    if (r.second.margin > total.second.margin) total.second = r.second;
  }
  if (windows.empty()) total.second = MinimalityVerdict{};
  return total;
}

int cmd_levelset(const Options& opt) {
  const Scenario s = load(opt);
  Run run("levelset", opt, &s);
  const Certificate c = solve_and_export(run, s);
  run.check("converged", c.converged && !c.diverging);
  const GridSpec& g = *s.spec.grid();
  const bool small = g.nx() <= 16 && g.ny() <= 16;
  Json levels = Json::array();
  const auto lambdas = level_values(s, c.u);
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const double lambda = lambdas[k];
    const LevelSet E = super_level_set(c.u, lambda);
    const std::string stem = "levelset_" + std::to_string(k);
    run.write_json(stem + ".json", to_json(E));
    run.write(stem + ".csv", field_csv(E.indicator()));
    Json entry{{"lambda", lambda}, {"count", E.count()}, {"psi", to_json(psi_perimeter(E, s.spec))}};
    char label[64];
    if (small) {
      const auto [fails, worst] = window_sweep(E, s, opt.threads);
      entry["exhaustive"] = {{"failing_windows", fails}, {"worst", to_json(worst)}};
      std::snprintf(label, sizeof label, "lambda[%zu] exhaustive windows", k);
      run.check(label, fails == 0);
    }
    const MinimalityVerdict rnd = check_minimality_random(E, s.spec, s.levelset.random_trials, s.levelset.max_flip,
                                                          s.solver.seed + k, s.solver.gap_tol);
    entry["random"] = to_json(rnd);
    std::snprintf(label, sizeof label, "lambda[%zu] random flips", k);
    run.check(label, rnd.pass);
    const LscReport lsc = lsc_check(c.u, lambda, s.spec, s.levelset.lsc_eps);
    entry["lsc"] = to_json(lsc);
    std::snprintf(label, sizeof label, "lambda[%zu] lower semicontinuity", k);
    run.check(label, lsc.pass);
    levels.push_back(entry);
  }
  run.write_json("levelset_report.json",
                 Json{{"format_version", kFormatVersion}, {"scenario", s.name}, {"levels", levels}});
  return run.finish();
}

int cmd_barrier(const Options& opt) {
  const Scenario s = load(opt);
  std::vector<ProbePlan> probes = s.probes;
  if (!opt.x0.empty() || opt.eps) {
    if (opt.x0.size() != 2 || !opt.eps) throw ConfigError("--x0 needs two coordinates together with --eps");
    probes = {ProbePlan{{opt.x0[0], opt.x0[1]}, *opt.eps, std::nullopt}};
  }
  if (probes.empty()) throw ConfigError("scenario '" + s.name + "' defines no barrier probes; pass --x0 and --eps");
  Run run("barrier-probe", opt, &s);
  for (std::size_t k = 0; k < probes.size(); ++k) {
    const ProbePlan& p = probes[k];
    BarrierReport r;
    try {
      r = barrier_probe(s.spec, p.x0, p.eps, s.anneal);
    } catch (const LevelSetError& e) {
      throw ConfigError(e.what());
    }
    run.write_json("probe_" + std::to_string(k) + ".json", to_json(r, p.x0, p.eps));
    std::printf("probe %zu at (%g, %g) eps %g: %s, %zu contact edges, %lld free cells\n", k, p.x0.x(), p.x0.y(),
                p.eps, r.holds ? "holds" : "violated", r.contact_edges.size(), static_cast<long long>(r.free_cells));
    if (p.expect_holds) {
      char label[64];
      std::snprintf(label, sizeof label, "probe[%zu] expected %s", k, *p.expect_holds ? "holds" : "violated");
      run.check(label, r.holds == *p.expect_holds);
    }
  }
  return run.finish();
}

int cmd_threshold(const Options& opt) {
  const Scenario s = load(opt);
  if (!s.spec.neumann()) throw ConfigError("threshold needs a Neumann scenario");
  Run run("threshold", opt, &s);
  const ThresholdReport t = existence_threshold(s.spec);
  Json j{{"format_version", kFormatVersion}, {"scenario", s.name}, {"estimate_rule", to_json(t)}};
  std::printf("verdict %s  (max|H| %.6g, 1/(1.1 C) %.6g, C %.6g)\n", to_string(t.verdict), t.h_norm, t.threshold,
              t.c_omega);

  const TheoremReport div = check_divergence_below(s.spec);
  j["divergence"] = to_json(div);
  const bool bounded = has_feasible_dual(s.spec);
  j["feasible_dual"] = bounded;
  std::printf("feasible dual %s, descending probe %s\n", bounded ? "found" : "not found", div.pass ? "found" : "not found");
  run.check("rule consistent with boundedness", t.verdict == Verdict::Unknown || (bounded && !div.pass));
  run.check("boundedness certified one way", !(bounded && div.pass));

  if (s.threshold) {
    const double hmax = s.spec.max_abs_curvature();
    if (!(hmax > 0.0)) throw ConfigError("threshold search needs a non-zero H");
    const ProblemSpec base = s.spec;
    auto family = [&](double c) {
      ScalarField H = base.curvature();
      H.values *= c / hmax;
      return ProblemSpec(base.grid(), base.weight(), base.drift(), H, base.bc());
    };
    const ThresholdSearch search = locate_threshold(family, s.threshold->lo, s.threshold->hi, s.threshold->rel_tol);
    j["search"] = to_json(search);
    std::printf("boundedness threshold in [%.6g, %.6g], estimate %.6g\n", search.bounded, search.unbounded,
                search.estimate);
    run.check("threshold search resolved", search.resolved);
    if (auto it = s.expected.find("threshold"); it != s.expected.end())
      run.check("threshold within 5% of expected", std::abs(search.estimate - it->second) <= 0.05 * it->second);
    const ThresholdReport below = existence_threshold(family(0.99 * t.threshold));
    run.check("rule guarantees existence below its threshold",
              below.verdict == Verdict::Guaranteed && search.bounded >= 0.99 * t.threshold);
  }
  run.write_json("threshold.json", j);
  return run.finish();
}

int cmd_list(const Options& opt) {
  if (opt.format == "json") {
    Json out = Json::array();
    for (const auto& name : builtin_scenario_names()) {
      const Scenario s = builtin_scenario(name);
      out.push_back({{"name", name}, {"description", s.description}, {"checks", s.checks}});
    }
    std::cout << out.dump(2) << "\n";
  } else {
    for (const auto& name : builtin_scenario_names())
      std::printf("%-22s %s\n", name.c_str(), builtin_scenario(name).description.c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted least-gradient solver with drift: solve, certify and probe scenarios"};
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App* sub, bool with_scenario = true) {
    if (with_scenario)
      sub->add_option("--scenario", opt.scenario, "built-in scenario name or path to a YAML file")->required();
    sub->add_option("--output-dir", opt.output_dir, "artifact directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "seed for randomized initialization, trials and annealing");
    sub->add_option("--threads", opt.threads, "worker threads for parallel sweeps")->check(CLI::Range(1, 1024));
    sub->add_option("--format", opt.format, "field artifact format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
  };

  std::function<int()> action;
  auto add = [&](const char* name, const char* help, std::function<int()> fn, bool with_scenario = true) {
    CLI::App* sub = app.add_subcommand(name, help);
    common(sub, with_scenario);
    sub->callback([&action, fn] { action = fn; });
    return sub;
  };
  add("solve-neumann", "solve a Neumann scenario and export the certificate",
      [&] { return cmd_solve(opt, BoundaryKind::Neumann, "solve-neumann"); });
  add("solve-dirichlet", "solve a relaxed Dirichlet scenario and export the certificate",
      [&] { return cmd_solve(opt, BoundaryKind::DirichletRelaxed, "solve-dirichlet"); });
  add("certify", "solve and run the scenario's checks", [&] { return cmd_certify(opt); });
  add("oracle", "smoothed-energy cross-check against the solver", [&] { return cmd_oracle(opt); });
  add("levelset", "super-level-set minimality and lower semicontinuity checks", [&] { return cmd_levelset(opt); });
  CLI::App* probe = add("barrier-probe", "barrier condition probes at boundary points", [&] { return cmd_barrier(opt); });
  probe->add_option("--x0", opt.x0, "probe point x y (overrides the scenario probes)")->expected(2);
  probe->add_option("--eps", opt.eps, "probe radius");
  add("threshold", "existence threshold rule, divergence probes and boundedness bisection",
      [&] { return cmd_threshold(opt); });
  add("list-scenarios", "list the built-in scenarios", [&] { return cmd_list(opt); }, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  try {
    return action();
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
}
