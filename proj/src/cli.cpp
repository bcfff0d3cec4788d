#include "hypergrad/cli.hpp"

#include "hypergrad/bench.hpp"
#include "hypergrad/dataset.hpp"
#include "hypergrad/efficiency.hpp"
#include "hypergrad/errors.hpp"
#include "hypergrad/report.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace hypergrad {

namespace {

struct Flags {
  std::string problem = "scalar";
  std::string train;
  std::string val;
  std::string outer = "quadratic";
  std::string strategies = "vanilla";
  int steps = 30;
  double y_low = -1.0;
  double y_high = 1.0;
  int trials = 1;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string svg_path;
  std::optional<double> eps;
  std::optional<double> step_size;
  std::optional<long> dims;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--problem", f.problem, "ridge|logistic|scalar|linear1d");
  app->add_option("--train", f.train, "training set (LIBSVM)");
  app->add_option("--val", f.val, "validation set (LIBSVM)");
  app->add_option("--outer", f.outer, "quadratic|affine");
  app->add_option("--strategies", f.strategies, "comma list of vanilla,newton,diag,exp,diag-rep,opt");
  app->add_option("--steps", f.steps, "gradient-descent steps");
  app->add_option("--y-low", f.y_low, "lower end of the y range");
  app->add_option("--y-high", f.y_high, "upper end of the y range");
  app->add_option("--trials", f.trials, "number of trials");
  app->add_option("--seed", f.seed, "base seed");
  app->add_option("--out", f.out_path, "CSV output path (stdout when absent)");
  app->add_option("--svg", f.svg_path, "SVG output path");
  app->add_option("--eps", f.eps, "hypergradient finite-difference step");
  app->add_option("--step-size", f.step_size, "constant gradient-descent step");
  app->add_option("--dims", f.dims, "feature count override");
}

RunConfig to_config(const Flags& f) {
  RunConfig c;
  c.problem = parse_problem_kind(f.problem);
  c.train_path = f.train;
  c.val_path = f.val;
  c.outer = parse_outer_kind(f.outer);
  c.strategies = parse_strategy_list(f.strategies);
  c.steps = f.steps;
  c.y_low = f.y_low;
  c.y_high = f.y_high;
  c.trials = f.trials;
  c.seed = f.seed;
  c.eps = f.eps;
  c.step_size = f.step_size;
  if (f.dims) c.dims = static_cast<Index>(*f.dims);
  c.validate();
  return c;
}

void emit(const Flags& f, const std::string& csv, std::ostream& out) {
  if (f.out_path.empty()) {
    out << csv;
  } else {
    write_file(f.out_path, csv);
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool at_least(double lhs, double rhs) { return lhs >= rhs - 1e-6 * (1.0 + std::abs(lhs)); }

std::string check_row(int trial, const std::string& name, double lhs, double rhs, bool holds) {
  return std::to_string(trial) + ',' + name + ',' + format_double(lhs) + ',' + format_double(rhs) + ',' +
         (holds ? "1" : "0") + '\n';
}

int run(int argc, const char* const* argv, std::ostream& out) {
  CLI::App app{"Hypergradient estimators for bilevel problems"};
  app.require_subcommand(1);
  Flags f;

  auto* decay = app.add_subcommand("decay", "error decay along one gradient-descent run");
  add_common(decay, f);

  auto* efficiency = app.add_subcommand("efficiency", "efficiency constants over seeded trials");
  add_common(efficiency, f);

  std::string precond = "diag", reparam = "diag-rep";
  double precond_scale = 1.0;
  auto* compare = app.add_subcommand("compare", "numeric checks of the comparison inequalities");
  add_common(compare, f);
  compare->add_option("--precond", precond, "newton|diag");
  compare->add_option("--reparam", reparam, "exp|diag-rep|opt");
  compare->add_option("--precond-scale", precond_scale, "multiplies the preconditioner");

  double alpha = 1.0, beta = 1.0, y1 = 0.0;
  std::string phi_kind = "exp";
  auto* ode = app.add_subcommand("ode1d", "one-dimensional super-efficiency residuals");
  add_common(ode, f);
  ode->add_option("--alpha", alpha, "phi(z) = alpha exp(beta z)");
  ode->add_option("--beta", beta, "phi(z) = alpha exp(beta z)");
  ode->add_option("--phi", phi_kind, "exp|identity");
  ode->add_option("--y", y1, "outer variable");

  std::string in_path;
  double floor = 1e-12;
  auto* slope = app.add_subcommand("slope", "log-log slope of hypergradient vs inner error");
  add_common(slope, f);
  slope->add_option("--in", in_path, "decay CSV to read instead of running");
  slope->add_option("--floor", floor, "ignore errors at or below this value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    throw UsageError(std::string(e.what()) + "\n" + app.help());
  }

  if (decay->parsed()) {
    const DecayResult r = run_decay(to_config(f));
    emit(f, emit_decay_csv(r), out);
    if (!f.svg_path.empty()) write_file(f.svg_path, render_decay_svg(r));
    return 0;
  }
  if (efficiency->parsed()) {
    const EfficiencyResult r = run_efficiency_sweep(to_config(f));
    emit(f, emit_efficiency_csv(r), out);
    if (!f.svg_path.empty()) write_file(f.svg_path, render_efficiency_svg(r));
    return 0;
  }
  if (compare->parsed()) {
    const RunConfig c = to_config(f);
    std::string csv = "# rng=mt19937_64\n# seed=" + std::to_string(c.seed) + "\n# precond=" + precond +
                      "\n# precond_scale=" + format_double(precond_scale) + "\n# reparam=" + reparam +
                      "\ntrial,check,lhs,rhs,holds\n";
    const Strategy rs = parse_strategy(reparam);
    if (rs != Strategy::exp && rs != Strategy::diag_rep && rs != Strategy::opt) {
      throw UsageError("--reparam must be exp, diag-rep or opt");
    }
    if (precond != "newton" && precond != "diag") throw UsageError("--precond must be newton or diag");
    for (int t = 0; t < c.trials; ++t) {
      const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(t);
      const BuiltProblem built = build_problem(c, seed);
      const BilevelProblem& p = built.problem;
      const Vector y = sample_y(p.dy(), c.y_low, c.y_high, seed);
      const PrecondPtr pc =
          precond == "newton" ? newton_preconditioner(p, precond_scale) : diag_preconditioner(p, precond_scale);
      const ReparamFactory phi = *reparam_factory(p, rs);
      const ComparisonBounds b = compare_bounds(p, pc, phi, y);
      csv += check_row(t, "phi_minus_p", b.lhs_phi_minus_p, b.rhs_phi_minus_p,
                       at_least(b.lhs_phi_minus_p, b.rhs_phi_minus_p));
      csv += check_row(t, "p_minus_phi", b.lhs_p_minus_phi, b.rhs_p_minus_phi,
                       at_least(b.lhs_p_minus_phi, b.rhs_p_minus_phi));
      const GapReport d = delta_gap(p, pc, phi, y);
      csv += check_row(t, "delta_gap", d.lhs, d.lower_bound - d.remainder, at_least(d.lhs, d.lower_bound - d.remainder));
      if (rs != Strategy::exp) {
        const SpecPtr spec = rs == Strategy::opt ? opt_reparam(p) : diag_reparam(p);
        const GapReport s = sigma_gap(p, pc, spec, y);
        csv += check_row(t, "sigma_gap", s.lhs, s.lower_bound - s.remainder,
                         at_least(s.lhs, s.lower_bound - s.remainder));
      }
      const OuterInnerBound o = outer_inner_bound(p, y);
      csv += check_row(t, "outer_inner", o.rhs, o.c_omega, at_least(o.rhs, o.c_omega));
    }
    emit(f, csv, out);
    return 0;
  }
  if (ode->parsed()) {
    if (f.problem != "linear1d" && f.problem != "scalar") throw UsageError("ode1d needs a one-dimensional problem");
    RunConfig c;
    c.problem = parse_problem_kind(f.problem);
    const BuiltProblem built = build_problem(c, 0);
    const Vector y = Vector::Constant(1, y1);
    ReparamPtr phi;
    if (phi_kind == "exp") {
      phi = exp_family_reparam(Vector::Constant(1, alpha), Vector::Constant(1, beta), 1);
    } else if (phi_kind == "identity") {
      phi = identity_reparam(1, 1);
    } else {
      throw UsageError("--phi must be exp or identity");
    }
    const double residual = ode1d_residual(built.problem, *phi, y);
    const double cy = efficiency_constant(reparam_estimator(built.problem, fixed_factory(phi)), phi_kind,
                                          built.problem, y)
                          .c_y;
    emit(f,
         "alpha,beta,y,residual,cy\n" + format_double(alpha) + ',' + format_double(beta) + ',' + format_double(y1) +
             ',' + format_double(residual) + ',' + format_double(cy) + '\n',
         out);
    return 0;
  }
  if (slope->parsed()) {
    const DecayResult r = in_path.empty() ? run_decay(to_config(f)) : parse_decay_csv(read_text(in_path));
    std::string csv = "strategy,slope\n";
    for (const DecayTrace& t : r.traces) csv += t.strategy + ',' + format_double(fit_loglog_slope(t, floor)) + '\n';
    emit(f, csv, out);
    return 0;
  }
  return 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    return run(argc, argv, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ContractViolation& e) {
    err << "invalid arguments: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace hypergrad
