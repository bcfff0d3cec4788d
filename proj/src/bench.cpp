#include "hypergrad/bench.hpp"

#include "hypergrad/dataset.hpp"
#include "hypergrad/efficiency.hpp"
#include "hypergrad/errors.hpp"
#include "hypergrad/random.hpp"
#include "hypergrad/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hypergrad {

ProblemKind parse_problem_kind(const std::string& text) {
  if (text == "ridge") return ProblemKind::ridge;
  if (text == "logistic") return ProblemKind::logistic;
  if (text == "scalar") return ProblemKind::scalar;
  if (text == "linear1d") return ProblemKind::linear1d;
  throw UsageError("unknown problem '" + text + "'");
}

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::ridge: return "ridge";
    case ProblemKind::logistic: return "logistic";
    case ProblemKind::scalar: return "scalar";
    case ProblemKind::linear1d: return "linear1d";
  }
  return "unknown";
}

void RunConfig::validate() const {
  if (strategies.empty()) throw UsageError("no strategies given");
  if (steps < 0) throw UsageError("--steps must be >= 0");
  if (trials < 1) throw UsageError("--trials must be >= 1");
  if (!std::isfinite(y_low) || !std::isfinite(y_high) || !(y_low < y_high)) {
    throw UsageError("need finite --y-low < --y-high");
  }
  if (eps && !(*eps > 0.0)) throw UsageError("--eps must be positive");
  if (step_size && !(*step_size > 0.0)) throw UsageError("--step-size must be positive");
  if (dims && *dims < 1) throw UsageError("--dims must be positive");
  const bool data = problem == ProblemKind::ridge || problem == ProblemKind::logistic;
  if (data && train_path.empty()) throw UsageError("--train is required for " + to_string(problem));
  if (problem == ProblemKind::logistic && outer == OuterKind::quadratic && val_path.empty()) {
    throw UsageError("--val is required for the logistic validation loss");
  }
}

namespace {

std::string join(const Vector& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v(i));
  }
  return out;
}

std::string basename(const std::string& path) {
  const auto slash = path.find_last_of("/\\");
  return slash == std::string::npos ? path : path.substr(slash + 1);
}

}  // namespace

BuiltProblem build_problem(const RunConfig& config, std::uint64_t val_seed) {
  Metadata meta;
  meta.emplace_back("problem", to_string(config.problem));
  switch (config.problem) {
    case ProblemKind::scalar: return {make_scalar_ridge(), meta};
    case ProblemKind::linear1d: return {make_linear1d(), meta};
    default: break;
  }

  Dataset train = load_libsvm(config.train_path, config.dims);
  std::optional<Dataset> val;
  if (!config.val_path.empty()) {
    val = load_libsvm(config.val_path, config.dims);
    // the union of the two index ranges
    const Index d = std::max(train.dims(), val->dims());
    train = pad_columns(train, d);
    *val = pad_columns(*val, d);
  }
  meta.emplace_back("train", basename(config.train_path));
  meta.emplace_back("train_rows", std::to_string(train.n()));
  meta.emplace_back("features", std::to_string(train.dims()));
  if (val) {
    meta.emplace_back("val", basename(config.val_path));
    meta.emplace_back("val_rows", std::to_string(val->n()));
  } else if (config.outer == OuterKind::quadratic) {
    val = random_validation(train.n(), train.dims(), val_seed);
    meta.emplace_back("val", "standard-normal");
    meta.emplace_back("val_seed", std::to_string(val_seed));
  } else {
    val = train;  // unused by the affine outer
  }
  meta.emplace_back("outer", to_string(config.outer));
  if (config.problem == ProblemKind::ridge) return {make_ridge(train, *val, config.outer), meta};
  return {make_logistic(train, *val, config.outer), meta};
}

DecayResult run_decay(const RunConfig& config) {
  config.validate();
  BuiltProblem built = build_problem(config, config.seed);
  const BilevelProblem& problem = built.problem;
  const Vector y = sample_y(problem.dy(), config.y_low, config.y_high, config.seed);
  const Vector xstar = problem.root(y);
  const Vector truth = vanilla_ift(problem, xstar, y);
  const Vector fd = fd_hypergradient(problem, y, config.eps);

  const StepRule rule = config.step_size ? StepRule::constant(*config.step_size) : StepRule::inverse_lipschitz();
  const Trajectory traj = gradient_descent(problem, y, Vector::Zero(problem.dx()), config.steps, rule);

  DecayResult out;
  out.metadata = built.metadata;
  out.metadata.emplace_back("rng", kRngName);
  out.metadata.emplace_back("seed", std::to_string(config.seed));
  out.metadata.emplace_back("y", join(y));
  out.metadata.emplace_back("steps", std::to_string(config.steps));
  out.metadata.emplace_back("step_size", traj.step_sizes.empty() ? "none" : format_double(traj.step_sizes.front()));
  out.metadata.emplace_back("truth", "ift-at-exact-root");
  out.metadata.emplace_back("truth_fd_gap", format_double((truth - fd).norm()));

  for (Strategy s : config.strategies) {
    DecayTrace trace;
    trace.strategy = to_string(s);
    const Estimator est = make_estimator(problem, s);
    for (std::size_t k = 0; k < traj.iterates.size(); ++k) {
      const Vector& x = traj.iterates[k];
      const int step = static_cast<int>(k);
      if (s == Strategy::exp && (x.array() == 0.0).any()) {
        trace.filtered_steps.push_back(step);
        continue;
      }
      try {
        const Vector e = est(x, y);
        trace.rows.push_back({step, (x - xstar).norm(), (e - truth).norm()});
      } catch (const Error& err) {
        trace.failure = "step " + std::to_string(step) + ": " + err.what();
        break;
      }
    }
    out.traces.push_back(std::move(trace));
  }
  for (const DecayTrace& t : out.traces) {
    if (!t.filtered_steps.empty()) {
      std::string steps;
      for (std::size_t i = 0; i < t.filtered_steps.size(); ++i) {
        if (i) steps += ' ';
        steps += std::to_string(t.filtered_steps[i]);
      }
      out.metadata.emplace_back("filtered_" + t.strategy, steps);
    }
    if (!t.failure.empty()) out.metadata.emplace_back("failed_" + t.strategy, t.failure);
  }
  return out;
}

EfficiencyResult run_efficiency_sweep(const RunConfig& config) {
  config.validate();
  EfficiencyResult out;
  for (int t = 0; t < config.trials; ++t) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(t);
    BuiltProblem built = build_problem(config, seed);
    if (t == 0) {
      out.metadata = built.metadata;
      out.metadata.emplace_back("rng", kRngName);
      out.metadata.emplace_back("seed", std::to_string(config.seed));
      out.metadata.emplace_back("trials", std::to_string(config.trials));
      out.metadata.emplace_back("y_range", format_double(config.y_low) + " " + format_double(config.y_high));
    }
    const Vector y = sample_y(built.problem.dy(), config.y_low, config.y_high, seed);
    for (Strategy s : config.strategies) {
      try {
        const EfficiencyReport r = efficiency_constant(make_estimator(built.problem, s), to_string(s), built.problem, y);
        out.rows.push_back({r.strategy, t, seed, r.c_y});
      } catch (const Error& err) {
        out.metadata.emplace_back("failed_" + to_string(s) + "_trial" + std::to_string(t), err.what());
      }
    }
  }
  return out;
}

double fit_loglog_slope(const DecayTrace& trace, double floor) {
  std::vector<double> lx, ly;
  for (const DecayRow& r : trace.rows) {
    if (r.hyper_error > floor && r.inner_error > 0.0 && std::isfinite(r.hyper_error) && std::isfinite(r.inner_error)) {
      lx.push_back(std::log(r.inner_error));
      ly.push_back(std::log(r.hyper_error));
    }
  }
  if (lx.size() < 3) {
    throw InsufficientDataError("slope fit for " + trace.strategy + " needs 3 rows above the floor, got " +
                                std::to_string(lx.size()));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw InsufficientDataError("slope fit for " + trace.strategy + ": inner errors are all equal");
  return sxy / sxx;
}

}  // namespace hypergrad
