#pragma once

#include "hypergrad/estimators.hpp"
#include "hypergrad/problem.hpp"

#include <optional>
#include <string>

namespace hypergrad {

struct EfficiencyReport {
  enum class Method { fd, analytic };

  std::string strategy;
  Vector y;
  double c_y = 0.0;
  Matrix jacobian;  // d_y x d_x
  Method method = Method::fd;
};

/// Central-difference Jacobian in x of a vector or matrix valued map at
/// `x`, each output flattened column-major into one row block.
Matrix fd_jacobian_x(const std::function<Matrix(const Vector&)>& fn, const Vector& x, double h);

/// Column j = (E(x* + h e_j, y) - E(x* - h e_j, y)) / 2h, h = 1e-5 (1 + |x*|)
/// unless `eps` is given.
Matrix estimator_jacobian_fd(const Estimator& estimator, const BilevelProblem& problem, const Vector& y,
                             std::optional<double> eps = std::nullopt);

EfficiencyReport efficiency_constant(const Estimator& estimator, const std::string& strategy,
                                     const BilevelProblem& problem, const Vector& y);

/// Omega_1 at x* from the derivative oracles: D + Psi_1 g_1.
Matrix vanilla_jacobian_analytic(const BilevelProblem& problem, const Vector& y);

/// The Psi_1 g_1 term of vanilla_jacobian_analytic.
Matrix psi1_g1_analytic(const BilevelProblem& problem, const Vector& y);

/// D = g_21 + Psi(x*, y) g_11.
Matrix d_matrix(const BilevelProblem& problem, const Vector& y);

/// E^P = I - P^{-1} F_1 at x*.
Matrix precond_error_at_root(const BilevelProblem& problem, const PreconditionerOracle& p, const Vector& y);

/// vanilla_jacobian_analytic * E^P.
Matrix precond_jacobian_at_root(const BilevelProblem& problem, const PreconditionerOracle& p, const Vector& y);

/// Jacobian at x* of x -> Psi(x, y) g_1(x*, y), with g_1 frozen.
Matrix psi1_g1_contract_fd(const BilevelProblem& problem, const PsiMap& psi_map, const Vector& y);

/// Spectral norm of the Jacobian at x* of x -> vec(Psi(x, y)).
double psi_efficiency_constant(const BilevelProblem& problem, const PsiMap& psi_map, const Vector& y);

struct ComparisonBounds {
  double c_p = 0.0;
  double c_phi = 0.0;
  double lhs_phi_minus_p = 0.0;
  double rhs_phi_minus_p = 0.0;
  double lhs_p_minus_phi = 0.0;
  double rhs_p_minus_phi = 0.0;
  Vector v_p;
  Vector v_phi;
};

/// Left sides from finite-difference Jacobians of both estimators, right
/// sides assembled from D, Psi_1 g_1, E^P and Psi_1^phi g_1.
ComparisonBounds compare_bounds(const BilevelProblem& problem, const PrecondPtr& p, const ReparamFactory& phi,
                                const Vector& y);

/// One asymptotic comparison: lhs >= lower_bound - remainder holds exactly,
/// and remainder vanishes with `parameter`.
struct GapReport {
  double parameter = 0.0;
  double lower_bound = 0.0;
  double lhs = 0.0;
  double remainder = 0.0;
};

/// parameter = |P - F_1| at x*; lhs = C(phi)^2 - C(P)^2;
/// lower_bound = |(D + Psi_1^phi g_1) v_P|^2; remainder = |D + Psi_1 g_1|^2 |E^P|^2.
GapReport delta_gap(const BilevelProblem& problem, const PrecondPtr& p, const ReparamFactory& phi, const Vector& y);

/// parameter = |g_1| C(Psi_loc); lhs = C(P)^2 - C(loc)^2;
/// lower_bound = |(D + Psi_1 g_1) E^P v_phi|^2 - |D v_phi|^2;
/// remainder = 2 |D v_phi| sigma + sigma^2.
GapReport sigma_gap(const BilevelProblem& problem, const PrecondPtr& p, const SpecPtr& spec, const Vector& y);

/// C(Omega) <= |D| + |g_1| C(Psi), norms at x*.
struct OuterInnerBound {
  double c_omega = 0.0;
  double rhs = 0.0;
};
OuterInnerBound outer_inner_bound(const BilevelProblem& problem, const Vector& y);

/// Distances of a separable spec from the Newton-like choice at (x*, z*).
/// The two contracted terms are maxima over 8 fixed unit probe directions.
struct NewtonReparamErrors {
  double e_q = 0.0;
  double e_q1 = 0.0;
  double e_q11 = 0.0;
  double e_r = 0.0;
  double e_r2 = 0.0;

  double max() const;
};
NewtonReparamErrors newton_reparam_error_terms(const BilevelProblem& problem, const SpecPtr& spec, const Vector& y);

/// Residual of the one-dimensional super-efficiency equation at (z*, y):
/// phi_12/phi_1 - phi_2 phi_11/phi_1^2 - F_2 phi_11/(F_1 phi_1^2) - (g_12/g_1 - F_12/F_1).
double ode1d_residual(const BilevelProblem& problem, const ReparamOracle& phi, const Vector& y);

}  // namespace hypergrad
