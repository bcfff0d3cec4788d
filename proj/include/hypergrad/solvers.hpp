#pragma once

#include "hypergrad/problem.hpp"

#include <optional>
#include <vector>

namespace hypergrad {

struct StepRule {
  enum class Kind { constant, inverse_lipschitz };
  Kind kind = Kind::inverse_lipschitz;
  double tau = 0.0;

  static StepRule constant(double tau) { return {Kind::constant, tau}; }
  /// tau = 1 / lambda_max(F_1(x0, y)), frozen for the whole run.
  static StepRule inverse_lipschitz() { return {Kind::inverse_lipschitz, 0.0}; }
};

struct Trajectory {
  std::vector<Vector> iterates;  // steps + 1 entries, x0 first
  std::vector<double> step_sizes;
};

/// x_k = x_{k-1} - tau F(x_{k-1}, y).
Trajectory gradient_descent(const BilevelProblem& problem, const Vector& y, const Vector& x0, int steps,
                            StepRule rule);

double default_hyper_eps(const Vector& y);
double default_jacobian_eps(const Vector& x);

/// Central differences of h(y) = g(x*(y), y) with x* from exact_root.
Vector fd_hypergradient(const BilevelProblem& problem, const Vector& y, std::optional<double> eps = std::nullopt);

/// Central differences of x*(y), shape d_x x d_y.
Matrix fd_jac_xstar(const BilevelProblem& problem, const Vector& y, std::optional<double> eps = std::nullopt);

}  // namespace hypergrad
