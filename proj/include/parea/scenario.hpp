// Scenario configuration: a YAML document describing the grid, the problem
// fields, the boundary condition, solver settings and the checks to run.
// The built-in library is stored in the same format. See README for the
// grammar.
#pragma once

#include "parea/levelset.hpp"
#include "parea/oracle.hpp"
#include "parea/pdhg.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace parea {

/// Parse or validation error, with the 1-based position of the offending
/// node when known (0 otherwise).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0, int column = 0);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct LevelSetPlan {
  std::vector<double> lambdas;  // explicit values; empty: `count` interior quantiles of u
  int count = 5;
  int window = 3;               // exhaustive window side
  int random_trials = 10000;
  int max_flip = 6;
  std::vector<double> lsc_eps{1e-1, 1e-2, 1e-3};
};

struct ProbePlan {
  Eigen::Vector2d x0{0.0, 0.0};
  double eps = 0.0;
  std::optional<bool> expect_holds;
};

struct ThresholdPlan {
  double lo = 0.5;
  double hi = 4.0;
  double rel_tol = 1e-3;
};

struct Scenario {
  std::string name;
  std::string description;
  std::string provenance;
  ProblemSpec spec;
  SolverConfig solver;
  OracleConfig oracle;
  std::vector<std::string> checks;
  int uniqueness_seeds = 5;
  LevelSetPlan levelset;
  std::vector<ProbePlan> probes;
  AnnealConfig anneal;
  std::optional<ThresholdPlan> threshold;
  std::map<std::string, double> expected;
  std::string source;  // the configuration text
};

/// Check names accepted in the `checks` list.
const std::vector<std::string>& known_checks();

/// base_dir resolves relative `file:` paths.
Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

const std::vector<std::string>& builtin_scenario_names();
/// Throws ConfigError for an unknown name.
const std::string& builtin_scenario_source(const std::string& name);
Scenario builtin_scenario(const std::string& name);
/// A built-in name, or else a path to a configuration file.
Scenario resolve_scenario(const std::string& name_or_path);

}  // namespace parea
