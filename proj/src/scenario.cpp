#include "parea/scenario.hpp"
#include "parea/io.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <set>
#include <sstream>

namespace parea {

ConfigError::ConfigError(const std::string& what, int line, int column)
    : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"
                                  : what),
      line_(line),
      column_(column) {}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"dual_feasibility",         "zero_gap",       "alignment",
                                              "boundary_complementarity", "zero_trace_set", "uniqueness",
                                              "existence_threshold",      "divergence_below"};
  return names;
}

namespace {

[[noreturn]] void fail(const YAML::Node& node, const std::string& what) {
  const YAML::Mark m = node.Mark();
  if (m.is_null()) throw ConfigError(what);
  throw ConfigError(what, m.line + 1, m.column + 1);
}

void require_map(const YAML::Node& node, const std::string& where) {
  if (!node.IsMap()) fail(node, where + " must be a mapping");
}

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  require_map(node, where);
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& what) {
  if (!node.IsScalar()) fail(node, what + " must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(node, "cannot read " + what + " from '" + node.Scalar() + "'");
  }
}

template <typename T>
T optional_scalar(const YAML::Node& parent, const char* key, T fallback, const std::string& where) {
  const YAML::Node n = parent[key];
  return n ? scalar<T>(n, where + "." + key) : fallback;
}

std::vector<double> real_list(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence()) fail(node, what + " must be a list");
  std::vector<double> out;
  for (const auto& v : node) out.push_back(scalar<double>(v, what + " entry"));
  return out;
}

// "kind:arg,arg,..." generator strings.
struct Generator {
  std::string kind;
  std::vector<std::string> args;
};

Generator split_generator(const YAML::Node& node, const std::string& what) {
  const std::string text = scalar<std::string>(node, what);
  Generator g;
  const auto colon = text.find(':');
  g.kind = text.substr(0, colon);
  if (colon != std::string::npos) {
    std::stringstream rest(text.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) g.args.push_back(item);
  }
  return g;
}

double number(const YAML::Node& node, const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(node, "bad number '" + s + "' in " + what);
}

int axis_arg(const YAML::Node& node, const std::string& s, const std::string& what) {
  if (s == "x") return 0;
  if (s == "y") return 1;
  fail(node, "axis must be x or y in " + what);
}

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

ScalarField scalar_generator(const YAML::Node& node, const GridPtr& grid, const std::string& what,
                             const std::filesystem::path& base) {
  const Generator gen = split_generator(node, what);
  auto want = [&](std::size_t n) {
    if (gen.args.size() != n) fail(node, what + ": '" + gen.kind + "' takes " + std::to_string(n) + " arguments");
  };
  ScalarField out(grid);
  if (gen.kind == "constant") {
    want(1);
    out.values.setConstant(number(node, gen.args[0], what));
  } else if (gen.kind == "step") {
    want(4);
    const int axis = axis_arg(node, gen.args[0], what);
    const double t = number(node, gen.args[1], what), lo = number(node, gen.args[2], what),
                 hi = number(node, gen.args[3], what);
    for (Index c = 0; c < out.size(); ++c) out[c] = grid->center(c)[axis] < t ? lo : hi;
  } else if (gen.kind == "slabs") {
    // slabs:axis,v0,t1,v1,t2,v2,...
    if (gen.args.size() < 2 || gen.args.size() % 2 != 0) fail(node, what + ": slabs takes axis,v0[,t1,v1...]");
    const int axis = axis_arg(node, gen.args[0], what);
    std::vector<double> cuts, vals{number(node, gen.args[1], what)};
    for (std::size_t k = 2; k < gen.args.size(); k += 2) {
      cuts.push_back(number(node, gen.args[k], what));
      vals.push_back(number(node, gen.args[k + 1], what));
      if (cuts.size() > 1 && !(cuts.back() > cuts[cuts.size() - 2])) fail(node, what + ": slab cuts must increase");
    }
    for (Index c = 0; c < out.size(); ++c) {
      const double x = grid->center(c)[axis];
      std::size_t k = 0;
      while (k < cuts.size() && x >= cuts[k]) ++k;
      out[c] = vals[k];
    }
  } else if (gen.kind == "file") {
    want(1);
    try {
      out = read_field_csv(read_text(resolve_path(base, gen.args[0])), grid);
    } catch (const std::exception& e) {
      fail(node, what + ": " + e.what());
    }
  } else {
    fail(node, what + ": unknown generator '" + gen.kind + "'");
  }
  return out;
}

VectorField drift_generator(const YAML::Node& node, const GridPtr& grid, const std::filesystem::path& base) {
  const Generator gen = split_generator(node, "fields.drift");
  if (gen.kind == "zero" && gen.args.empty()) return VectorField(grid);
  if (gen.kind == "heisenberg") {
    if (gen.args.empty()) return heisenberg_drift(grid, grid->lattice_center());
    if (gen.args.size() == 2)
      return heisenberg_drift(grid, {number(node, gen.args[0], "fields.drift"), number(node, gen.args[1], "fields.drift")});
    fail(node, "fields.drift: heisenberg takes no arguments or cx,cy");
  }
  if (gen.kind == "file" && gen.args.size() == 1) {
    VectorField out(grid);
    std::istringstream in(read_text(resolve_path(base, gen.args[0])));
    std::string line;
    std::getline(in, line);
    if (line.rfind("x_index,y_index,value,value2", 0) != 0) fail(node, "fields.drift: file needs a value2 column");
    std::vector<bool> seen(static_cast<std::size_t>(grid->cell_count()), false);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      int i = 0, j = 0;
      double x = 0, y = 0;
      if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &i, &j, &x, &y) != 4) fail(node, "fields.drift: bad row '" + line + "'");
      const Index c = grid->index(i, j);
      if (c < 0) fail(node, "fields.drift: row names a cell outside the mask");
      out.values(c, 0) = x;
      out.values(c, 1) = y;
      seen[static_cast<std::size_t>(c)] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) fail(node, "fields.drift: file misses cells");
    return out;
  }
  fail(node, "fields.drift: expected zero, heisenberg[:cx,cy] or file:path");
}

BoundaryTrace boundary_generator(const YAML::Node& node, const GridPtr& grid, const std::filesystem::path& base) {
  const Generator gen = split_generator(node, "boundary.f");
  BoundaryTrace out(grid);
  const auto& edges = grid->boundary_edges();
  if (gen.kind == "constant" && gen.args.size() == 1) {
    out.values.setConstant(number(node, gen.args[0], "boundary.f"));
  } else if (gen.kind == "affine" && gen.args.size() == 3) {
    // f = ax x + ay y + b at the edge midpoint.
    const double ax = number(node, gen.args[0], "boundary.f"), ay = number(node, gen.args[1], "boundary.f"),
                 b = number(node, gen.args[2], "boundary.f");
    for (std::size_t e = 0; e < edges.size(); ++e) {
      Eigen::Vector2d mid = grid->center(edges[e].cell);
      mid[axis_of(edges[e].dir)] += 0.5 * sign_of(edges[e].dir) * grid->h();
      out.values[static_cast<Index>(e)] = ax * mid.x() + ay * mid.y() + b;
    }
  } else if (gen.kind == "file" && gen.args.size() == 1) {
    std::istringstream in(read_text(resolve_path(base, gen.args[0])));
    std::string line;
    std::getline(in, line);
    if (line.rfind("edge,", 0) != 0) fail(node, "boundary.f: file needs the edge CSV header");
    std::vector<bool> seen(edges.size(), false);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto last = line.rfind(',');
      std::size_t e = 0;
      try {
        e = std::stoul(line.substr(0, line.find(',')));
      } catch (const std::exception&) {
        fail(node, "boundary.f: bad row '" + line + "'");
      }
      if (e >= edges.size() || last == std::string::npos) fail(node, "boundary.f: bad row '" + line + "'");
      out.values[static_cast<Index>(e)] = number(node, line.substr(last + 1), "boundary.f");
      seen[e] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) fail(node, "boundary.f: file misses edges");
  } else {
    fail(node, "boundary.f: expected constant:c, affine:ax,ay,b or file:path");
  }
  return out;
}

GridPtr parse_grid(const YAML::Node& node) {
  if (!node) throw ConfigError("missing 'grid' section");
  check_keys(node, {"nx", "ny", "h", "mask"}, "grid");
  for (const char* k : {"nx", "ny"})
    if (!node[k]) fail(node, std::string("grid.") + k + " is required");
  const int nx = scalar<int>(node["nx"], "grid.nx"), ny = scalar<int>(node["ny"], "grid.ny");
  if (nx < 2 || ny < 2) fail(node, "grid needs nx, ny >= 2");
  const double h = node["h"] ? scalar<double>(node["h"], "grid.h") : 1.0 / std::max(nx, ny);
  const std::string mask = node["mask"] ? scalar<std::string>(node["mask"], "grid.mask") : "full";
  try {
    if (mask == "full") return make_grid(GridSpec::full(nx, ny, h));
    if (mask == "disk") return make_grid(GridSpec::disk(nx, ny, h));
    return make_grid(GridSpec(nx, ny, h, decode_rle(mask, static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny))));
  } catch (const FormatError& e) {
    fail(node["mask"], e.what());
  } catch (const GridError& e) {
    fail(node, e.what());
  }
}

SolverConfig parse_solver(const YAML::Node& node) {
  SolverConfig cfg;
  cfg.gap_tol = 1e-7;
  if (!node) return cfg;
  check_keys(node, {"max_iters", "gap_tol", "check_every", "seed", "init", "tau", "sigma"}, "solver");
  cfg.max_iters = optional_scalar<int>(node, "max_iters", cfg.max_iters, "solver");
  cfg.gap_tol = optional_scalar<double>(node, "gap_tol", cfg.gap_tol, "solver");
  cfg.check_every = optional_scalar<int>(node, "check_every", cfg.check_every, "solver");
  cfg.seed = optional_scalar<std::uint64_t>(node, "seed", cfg.seed, "solver");
  if (node["tau"]) cfg.tau = scalar<double>(node["tau"], "solver.tau");
  if (node["sigma"]) cfg.sigma = scalar<double>(node["sigma"], "solver.sigma");
  if (node["init"]) {
    const std::string init = scalar<std::string>(node["init"], "solver.init");
    if (init == "zero")
      cfg.init = InitKind::Zero;
    else if (init == "random")
      cfg.init = InitKind::Random;
    else
      fail(node["init"], "solver.init must be zero or random");
  }
  if (!(cfg.gap_tol > 0.0)) fail(node, "solver.gap_tol must be positive");
  if (cfg.max_iters < 1 || cfg.check_every < 1) fail(node, "solver.max_iters and check_every must be positive");
  return cfg;
}

OracleConfig parse_oracle(const YAML::Node& node) {
  OracleConfig cfg;
  if (!node) return cfg;
  check_keys(node, {"epsilons", "descent_tol", "max_iters"}, "oracle");
  if (node["epsilons"]) cfg.epsilons = real_list(node["epsilons"], "oracle.epsilons");
  cfg.descent_tol = optional_scalar<double>(node, "descent_tol", cfg.descent_tol, "oracle");
  cfg.max_iters = optional_scalar<int>(node, "max_iters", cfg.max_iters, "oracle");
  for (std::size_t k = 0; k < cfg.epsilons.size(); ++k)
    if (!(cfg.epsilons[k] > 0.0) || (k > 0 && !(cfg.epsilons[k] < cfg.epsilons[k - 1])))
      fail(node["epsilons"], "oracle.epsilons must be positive and strictly decreasing");
  return cfg;
}

LevelSetPlan parse_levelset(const YAML::Node& node) {
  LevelSetPlan p;
  if (!node) return p;
  check_keys(node, {"lambdas", "count", "window", "random_trials", "max_flip", "lsc_eps"}, "levelset");
  if (node["lambdas"]) p.lambdas = real_list(node["lambdas"], "levelset.lambdas");
  p.count = optional_scalar<int>(node, "count", p.count, "levelset");
  p.window = optional_scalar<int>(node, "window", p.window, "levelset");
  p.random_trials = optional_scalar<int>(node, "random_trials", p.random_trials, "levelset");
  p.max_flip = optional_scalar<int>(node, "max_flip", p.max_flip, "levelset");
  if (node["lsc_eps"]) p.lsc_eps = real_list(node["lsc_eps"], "levelset.lsc_eps");
  if (p.window < 1 || p.window > 4) fail(node, "levelset.window must be in 1..4");
  if (p.count < 0 || p.random_trials < 1 || p.max_flip < 0) fail(node, "levelset counts must be non-negative");
  return p;
}

std::vector<ProbePlan> parse_probes(const YAML::Node& node, AnnealConfig& anneal) {
  std::vector<ProbePlan> out;
  if (!node) return out;
  check_keys(node, {"probes", "sweeps_per_cell", "t_final_ratio", "seed"}, "barrier");
  anneal.sweeps_per_cell = optional_scalar<int>(node, "sweeps_per_cell", anneal.sweeps_per_cell, "barrier");
  anneal.t_final_ratio = optional_scalar<double>(node, "t_final_ratio", anneal.t_final_ratio, "barrier");
  anneal.seed = optional_scalar<std::uint64_t>(node, "seed", anneal.seed, "barrier");
  const YAML::Node probes = node["probes"];
  if (!probes) return out;
  if (!probes.IsSequence()) fail(probes, "barrier.probes must be a list");
  for (const auto& p : probes) {
    check_keys(p, {"x", "y", "eps", "expect"}, "barrier probe");
    for (const char* k : {"x", "y", "eps"})
      if (!p[k]) fail(p, std::string("barrier probe needs '") + k + "'");
    ProbePlan plan;
    plan.x0 = {scalar<double>(p["x"], "probe.x"), scalar<double>(p["y"], "probe.y")};
    plan.eps = scalar<double>(p["eps"], "probe.eps");
    if (p["expect"]) {
      const std::string e = scalar<std::string>(p["expect"], "probe.expect");
      if (e != "holds" && e != "violated") fail(p["expect"], "probe.expect must be holds or violated");
      plan.expect_holds = e == "holds";
    }
    out.push_back(plan);
  }
  return out;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("YAML syntax error: " + e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  check_keys(root, {"name", "description", "provenance", "grid", "fields", "boundary", "solver", "oracle", "checks",
                    "uniqueness_seeds", "levelset", "barrier", "threshold", "expected"},
             "scenario");
  if (!root["name"]) throw ConfigError("missing 'name'");

  const GridPtr grid = parse_grid(root["grid"]);

  const YAML::Node fields = root["fields"];
  ScalarField a = ScalarField::constant(grid, 1.0), H(grid);
  VectorField F(grid);
  if (fields) {
    check_keys(fields, {"a", "drift", "H"}, "fields");
    if (fields["a"]) a = scalar_generator(fields["a"], grid, "fields.a", base_dir);
    if (fields["H"]) H = scalar_generator(fields["H"], grid, "fields.H", base_dir);
    if (fields["drift"]) F = drift_generator(fields["drift"], grid, base_dir);
  }

  BoundaryCondition bc;
  const YAML::Node bnode = root["boundary"];
  if (!bnode) throw ConfigError("missing 'boundary' section");
  check_keys(bnode, {"kind", "f"}, "boundary");
  const std::string kind = bnode["kind"] ? scalar<std::string>(bnode["kind"], "boundary.kind") : "";
  if (kind == "neumann") {
    if (bnode["f"]) fail(bnode["f"], "Neumann boundary takes no data f");
  } else if (kind == "dirichlet") {
    if (!bnode["f"]) fail(bnode, "dirichlet boundary needs f");
    bc = BoundaryCondition::dirichlet(boundary_generator(bnode["f"], grid, base_dir));
  } else {
    fail(bnode, "boundary.kind must be neumann or dirichlet");
  }

  std::optional<ProblemSpec> spec;
  try {
    spec.emplace(grid, std::move(a), std::move(F), std::move(H), std::move(bc));
  } catch (const std::invalid_argument& e) {
    fail(fields ? fields : root, e.what());
  }

  std::vector<std::string> checks;
  if (const YAML::Node c = root["checks"]) {
    if (!c.IsSequence()) fail(c, "checks must be a list");
    for (const auto& item : c) {
      const std::string name = scalar<std::string>(item, "check name");
      const auto& known = known_checks();
      if (std::find(known.begin(), known.end(), name) == known.end()) fail(item, "unknown check '" + name + "'");
      checks.push_back(name);
    }
  }

  std::optional<ThresholdPlan> threshold;
  if (const YAML::Node t = root["threshold"]) {
    check_keys(t, {"lo", "hi", "rel_tol"}, "threshold");
    ThresholdPlan p;
    p.lo = optional_scalar<double>(t, "lo", p.lo, "threshold");
    p.hi = optional_scalar<double>(t, "hi", p.hi, "threshold");
    p.rel_tol = optional_scalar<double>(t, "rel_tol", p.rel_tol, "threshold");
    if (!(p.lo >= 0.0 && p.hi > p.lo && p.rel_tol > 0.0)) fail(t, "threshold needs 0 <= lo < hi and rel_tol > 0");
    threshold = p;
  }

  std::map<std::string, double> expected;
  if (const YAML::Node e = root["expected"]) {
    require_map(e, "expected");
    for (const auto& kv : e) expected[kv.first.as<std::string>()] = scalar<double>(kv.second, "expected value");
  }

  AnnealConfig anneal;
  std::vector<ProbePlan> probes = parse_probes(root["barrier"], anneal);
  const int seeds = optional_scalar<int>(root, "uniqueness_seeds", 5, "scenario");
  if (seeds < 2) fail(root["uniqueness_seeds"], "uniqueness_seeds must be at least 2");

  return Scenario{scalar<std::string>(root["name"], "name"),
                  optional_scalar<std::string>(root, "description", "", "scenario"),
                  optional_scalar<std::string>(root, "provenance", "", "scenario"),
                  std::move(*spec),
                  parse_solver(root["solver"]),
                  parse_oracle(root["oracle"]),
                  std::move(checks),
                  seeds,
                  parse_levelset(root["levelset"]),
                  std::move(probes),
                  anneal,
                  threshold,
                  std::move(expected),
                  text};
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_scenario(text, path.parent_path());
}

namespace {

const std::vector<std::pair<std::string, std::string>>& library() {
  static const std::vector<std::pair<std::string, std::string>> lib{
      {"trivial", R"(name: trivial
description: zero drift and curvature on a small square; the zero field is a saddle point
provenance: closed form (u = 0, N = 0)
grid: {nx: 8, ny: 8, h: 0.125, mask: full}
fields: {a: "constant:1", drift: zero, H: "constant:0"}
boundary: {kind: neumann}
solver: {max_iters: 1000, gap_tol: 1.0e-7}
checks: [dual_feasibility, zero_gap, alignment, existence_threshold]
expected: {primal_value: 0}
)"},
      {"step-c1", R"(name: step-c1
description: one-dimensional step curvature H = -1 | +1 on a 256-cell strip; below the threshold c = 2
provenance: closed-form step-family slope t(2 - c)/2 and dual b(x) = int_0^x H
grid: {nx: 256, ny: 2, h: 0.00390625, mask: "256#256."}
fields: {a: "constant:1", drift: zero, H: "step:x,0.5,-1,1"}
boundary: {kind: neumann}
solver: {max_iters: 400000, gap_tol: 1.0e-6}
checks: [dual_feasibility, zero_gap, alignment, existence_threshold]
threshold: {lo: 0.5, hi: 4.0, rel_tol: 1.0e-3}
expected: {primal_value: 0, threshold: 2}
)"},
      {"step-c2", R"(name: step-c2
description: step curvature at the threshold c = 2; bounded with a saturated dual
provenance: closed-form step-family slope t(2 - c)/2
grid: {nx: 256, ny: 2, h: 0.00390625, mask: "256#256."}
fields: {a: "constant:1", drift: zero, H: "step:x,0.5,-2,2"}
boundary: {kind: neumann}
solver: {max_iters: 50000, gap_tol: 1.0e-5}
checks: []
threshold: {lo: 0.5, hi: 4.0, rel_tol: 1.0e-3}
expected: {threshold: 2}
)"},
      {"step-c3", R"(name: step-c3
description: step curvature above the threshold; the energy is unbounded below
provenance: closed-form step-family slope t(2 - c)/2 = -t/2
grid: {nx: 256, ny: 2, h: 0.00390625, mask: "256#256."}
fields: {a: "constant:1", drift: zero, H: "step:x,0.5,-3,3"}
boundary: {kind: neumann}
solver: {max_iters: 50000, gap_tol: 1.0e-5}
checks: [divergence_below]
threshold: {lo: 0.5, hi: 4.0, rel_tol: 1.0e-3}
expected: {threshold: 2}
)"},
      {"heisenberg-disk-16", R"(name: heisenberg-disk-16
description: Heisenberg drift on the inscribed disk, zero boundary data, 16 x 16
provenance: regression value; cross-checked by the smoothed oracle
grid: {nx: 16, ny: 16, h: 0.0625, mask: disk}
fields: {a: "constant:1", drift: heisenberg, H: "constant:0"}
boundary: {kind: dirichlet, f: "constant:0"}
solver: {max_iters: 50000, gap_tol: 1.0e-7}
checks: [dual_feasibility, zero_gap, alignment, boundary_complementarity]
expected: {primal_value: 0.2747181}
)"},
      {"heisenberg-disk-32", R"(name: heisenberg-disk-32
description: Heisenberg drift on the inscribed disk, zero boundary data, 32 x 32
provenance: regression value; cross-checked by the smoothed oracle
grid: {nx: 32, ny: 32, h: 0.03125, mask: disk}
fields: {a: "constant:1", drift: heisenberg, H: "constant:0"}
boundary: {kind: dirichlet, f: "constant:0"}
solver: {max_iters: 50000, gap_tol: 1.0e-7}
checks: [dual_feasibility, zero_gap, alignment, boundary_complementarity]
expected: {primal_value: 0.2654054}
)"},
      {"heisenberg-disk-64", R"(name: heisenberg-disk-64
description: Heisenberg drift on the inscribed disk, zero boundary data, 64 x 64
provenance: regression value; cross-checked by the smoothed oracle
grid: {nx: 64, ny: 64, h: 0.015625, mask: disk}
fields: {a: "constant:1", drift: heisenberg, H: "constant:0"}
boundary: {kind: dirichlet, f: "constant:0"}
solver: {max_iters: 50000, gap_tol: 1.0e-7}
checks: [dual_feasibility, zero_gap, alignment, boundary_complementarity]
expected: {primal_value: 0.2630995}
)"},
      {"heisenberg-square-64", R"(name: heisenberg-square-64
description: Heisenberg drift on the unit square with the Neumann condition, 64 x 64
provenance: regression value; direction field compared across random starts
grid: {nx: 64, ny: 64, h: 0.015625, mask: full}
fields: {a: "constant:1", drift: heisenberg, H: "constant:0"}
boundary: {kind: neumann}
solver: {max_iters: 200000, gap_tol: 1.0e-7}
checks: [dual_feasibility, zero_gap, alignment, existence_threshold, uniqueness]
uniqueness_seeds: 5
expected: {primal_value: 0.3369346}
)"},
      {"dirichlet-detach", R"(name: dirichlet-detach
description: weight 0.2 on the two left columns and 10 on the two right columns with H = -2; u leaves the zero data on part of the boundary
provenance: engineered instance; detached and slack edges both present
grid: {nx: 32, ny: 32, h: 0.03125, mask: full}
fields: {a: "slabs:x,0.2,0.0625,1,0.9375,10", drift: heisenberg, H: "constant:-2"}
boundary: {kind: dirichlet, f: "constant:0"}
solver: {max_iters: 50000, gap_tol: 1.0e-7}
checks: [dual_feasibility, zero_gap, alignment, boundary_complementarity, zero_trace_set]
expected: {primal_value: 0.5883622}
)"},
      {"barrier-notch", R"(name: barrier-notch
description: unit square with a two-cell-wide, four-cell-deep slot cut from the top edge
provenance: exhaustive enumeration on balls of at most 16 cells
grid: {nx: 16, ny: 16, h: 0.0625, mask: "199#2.14#2.14#2.14#2.7#"}
fields: {a: "constant:1", drift: zero, H: "constant:0"}
boundary: {kind: neumann}
solver: {max_iters: 50000, gap_tol: 1.0e-7}
checks: [dual_feasibility, zero_gap]
barrier:
  probes:
    - {x: 0.0, y: 0.0, eps: 0.1875, expect: holds}
    - {x: 1.0, y: 1.0, eps: 0.1875, expect: holds}
    - {x: 0.5, y: 0.75, eps: 0.125, expect: violated}
    - {x: 0.5, y: 0.0, eps: 0.125, expect: violated}
)"},
  };
  return lib;
}

}  // namespace

const std::vector<std::string>& builtin_scenario_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, v] : library()) n.push_back(k);
    return n;
  }();
  return names;
}

const std::string& builtin_scenario_source(const std::string& name) {
  for (const auto& [k, v] : library())
    if (k == name) return v;
  throw ConfigError("unknown scenario '" + name + "'");
}

Scenario builtin_scenario(const std::string& name) { return parse_scenario(builtin_scenario_source(name)); }

Scenario resolve_scenario(const std::string& name_or_path) {
  const auto& names = builtin_scenario_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return builtin_scenario(name_or_path);
  if (std::filesystem::exists(name_or_path)) return load_scenario(name_or_path);
  throw ConfigError("'" + name_or_path + "' is neither a built-in scenario nor a readable file");
}

}  // namespace parea
