#include "hypergrad/solvers.hpp"

#include "hypergrad/errors.hpp"
#include "hypergrad/linalg.hpp"

#include <cmath>

namespace hypergrad {

Trajectory gradient_descent(const BilevelProblem& problem, const Vector& y, const Vector& x0, int steps,
                            StepRule rule) {
  if (steps < 0) throw ContractViolation("gradient_descent: steps must be >= 0");
  if (x0.size() != problem.dx() || y.size() != problem.dy()) {
    throw ContractViolation("gradient_descent: point has the wrong dimension");
  }
  double tau = rule.tau;
  if (rule.kind == StepRule::Kind::inverse_lipschitz) {
    const Matrix j = problem.jac_x(x0, y);
    const double lmax = spectral_norm(0.5 * (j + j.transpose()));
    if (!(lmax > 0.0)) throw NumericalFailure("gradient_descent: F_1 has no positive spectrum at x0");
    tau = 1.0 / lmax;
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ContractViolation("gradient_descent: step size must be positive");

  Trajectory out;
  out.iterates.reserve(static_cast<std::size_t>(steps) + 1);
  out.iterates.push_back(x0);
  out.step_sizes.reserve(static_cast<std::size_t>(steps));
  Vector x = x0;
  for (int k = 1; k <= steps; ++k) {
    Vector f;
    try {
      f = problem.residual(x, y);
    } catch (const NumericalFailure&) {
      throw NumericalFailure("non-finite residual in gradient descent", static_cast<std::size_t>(k));
    }
    x -= tau * f;
    if (!x.allFinite()) throw NumericalFailure("non-finite iterate in gradient descent", static_cast<std::size_t>(k));
    out.iterates.push_back(x);
    out.step_sizes.push_back(tau);
  }
  return out;
}

double default_hyper_eps(const Vector& y) { return 1e-6 * (1.0 + y.norm()); }

double default_jacobian_eps(const Vector& x) { return 1e-5 * (1.0 + x.norm()); }

namespace {

double resolve_eps(std::optional<double> eps, const Vector& y) {
  const double e = eps ? *eps : default_hyper_eps(y);
  if (!(e > 0.0) || !std::isfinite(e)) throw ContractViolation("finite-difference step must be positive");
  return e;
}

}  // namespace

Vector fd_hypergradient(const BilevelProblem& problem, const Vector& y, std::optional<double> eps) {
  const double h = resolve_eps(eps, y);
  auto value = [&](const Vector& yy) { return problem.outer_value(problem.root(yy), yy); };
  Vector grad(problem.dy());
  for (Index j = 0; j < problem.dy(); ++j) {
    Vector yp = y, ym = y;
    yp(j) += h;
    ym(j) -= h;
    grad(j) = (value(yp) - value(ym)) / (2.0 * h);
  }
  return grad;
}

Matrix fd_jac_xstar(const BilevelProblem& problem, const Vector& y, std::optional<double> eps) {
  const double h = resolve_eps(eps, y);
  Matrix jac(problem.dx(), problem.dy());
  for (Index j = 0; j < problem.dy(); ++j) {
    Vector yp = y, ym = y;
    yp(j) += h;
    ym(j) -= h;
    jac.col(j) = (problem.root(yp) - problem.root(ym)) / (2.0 * h);
  }
  return jac;
}

}  // namespace hypergrad
