#pragma once

#include "hypergrad/estimators.hpp"
#include "hypergrad/models.hpp"
#include "hypergrad/problem.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hypergrad {

enum class ProblemKind { ridge, logistic, scalar, linear1d };

ProblemKind parse_problem_kind(const std::string& text);
std::string to_string(ProblemKind kind);

/// Ordered `key=value` pairs written ahead of CSV output.
using Metadata = std::vector<std::pair<std::string, std::string>>;

struct RunConfig {
  ProblemKind problem = ProblemKind::scalar;
  std::string train_path;
  std::string val_path;  // ridge: standard normal validation data when empty
  std::optional<Index> dims;
  OuterKind outer = OuterKind::quadratic;
  std::vector<Strategy> strategies = {Strategy::vanilla};
  int steps = 30;
  double y_low = -1.0;
  double y_high = 1.0;
  int trials = 1;
  std::uint64_t seed = 0;
  std::optional<double> eps;        // hypergradient finite-difference step
  std::optional<double> step_size;  // constant gradient-descent step

  /// UsageError on an invalid combination.
  void validate() const;
};

struct BuiltProblem {
  BilevelProblem problem;
  Metadata metadata;
};

/// Loads data and assembles the configured problem. `val_seed` drives the
/// generated validation set when no validation file is given.
BuiltProblem build_problem(const RunConfig& config, std::uint64_t val_seed);

struct DecayRow {
  int step = 0;
  double inner_error = 0.0;
  double hyper_error = 0.0;
};

struct DecayTrace {
  std::string strategy;
  std::vector<DecayRow> rows;
  std::vector<int> filtered_steps;  // skipped iterates (exp map at a zero coordinate)
  std::string failure;              // non-empty when the strategy aborted
};

struct DecayResult {
  Metadata metadata;
  std::vector<DecayTrace> traces;
};

/// One gradient-descent run from x0 = 0 shared by every strategy. Errors are
/// measured against x* and the hypergradient at x* computed once.
DecayResult run_decay(const RunConfig& config);

struct EfficiencyRow {
  std::string strategy;
  int trial = 0;
  std::uint64_t seed = 0;
  double c_y = 0.0;
};

struct EfficiencyResult {
  Metadata metadata;
  std::vector<EfficiencyRow> rows;  // trial-major, strategies in config order
};

/// Trial t uses seed + t for both y and any generated validation data.
EfficiencyResult run_efficiency_sweep(const RunConfig& config);

/// Least-squares slope of log(hyper_error) against log(inner_error) over rows
/// with hyper_error > floor. InsufficientDataError below 3 such rows.
double fit_loglog_slope(const DecayTrace& trace, double floor = 1e-12);

}  // namespace hypergrad
