#include "hypergrad/efficiency.hpp"

#include "hypergrad/errors.hpp"
#include "hypergrad/linalg.hpp"
#include "hypergrad/random.hpp"
#include "hypergrad/solvers.hpp"

#include <algorithm>
#include <cmath>

namespace hypergrad {

namespace {

Vector unit(Index n, Index j) {
  Vector e = Vector::Zero(n);
  e(j) = 1.0;
  return e;
}

Vector flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

}  // namespace

Matrix fd_jacobian_x(const std::function<Matrix(const Vector&)>& fn, const Vector& x, double h) {
  if (!(h > 0.0)) throw ContractViolation("finite-difference step must be positive");
  Matrix jac;
  for (Index j = 0; j < x.size(); ++j) {
    Vector plus = x, minus = x;
    plus(j) += h;
    minus(j) -= h;
    const Vector col = (flatten(fn(plus)) - flatten(fn(minus))) / (2.0 * h);
    if (j == 0) jac.resize(col.size(), x.size());
    jac.col(j) = col;
  }
  return jac;
}

Matrix estimator_jacobian_fd(const Estimator& estimator, const BilevelProblem& problem, const Vector& y,
                             std::optional<double> eps) {
  const Vector xstar = problem.root(y);
  const double h = eps ? *eps : default_jacobian_eps(xstar);
  if (!(h > 0.0)) throw ContractViolation("finite-difference step must be positive");
  Matrix jac(problem.dy(), problem.dx());
  for (Index j = 0; j < problem.dx(); ++j) {
    Vector plus = xstar, minus = xstar;
    plus(j) += h;
    minus(j) -= h;
    Vector ep, em;
    try {
      ep = estimator(plus, y);
      em = estimator(minus, y);
    } catch (const Error& err) {
      throw NumericalFailure("estimator failed at probe x* +/- h e_" + std::to_string(j) + ": " + err.what());
    }
    jac.col(j) = (ep - em) / (2.0 * h);
  }
  return jac;
}

EfficiencyReport efficiency_constant(const Estimator& estimator, const std::string& strategy,
                                     const BilevelProblem& problem, const Vector& y) {
  EfficiencyReport r;
  r.strategy = strategy;
  r.y = y;
  r.jacobian = estimator_jacobian_fd(estimator, problem, y);
  r.c_y = spectral_norm(r.jacobian);
  r.method = EfficiencyReport::Method::fd;
  return r;
}

Matrix psi1_g1_analytic(const BilevelProblem& problem, const Vector& y) {
  const Vector x = problem.root(y);
  const LU lu(problem.jac_x(x, y), "F_1");
  const Vector a = lu.solve_transposed(problem.outer_grad_x(x, y));
  const Matrix b = lu.solve(problem.jac_y(x, y));
  Matrix out(problem.dy(), problem.dx());
  for (Index e = 0; e < problem.dy(); ++e) {
    const Matrix m = problem.djac_x_dir_x(x, y, b.col(e)) - problem.djac_x_dir_y(x, y, unit(problem.dy(), e));
    out.row(e) = (m.transpose() * a).transpose();
  }
  return out;
}

Matrix d_matrix(const BilevelProblem& problem, const Vector& y) {
  const Vector x = problem.root(y);
  return problem.outer_jac_grad_y_x(x, y) + psi(problem, x, y) * problem.outer_hess_xx(x, y);
}

Matrix vanilla_jacobian_analytic(const BilevelProblem& problem, const Vector& y) {
  return d_matrix(problem, y) + psi1_g1_analytic(problem, y);
}

Matrix precond_error_at_root(const BilevelProblem& problem, const PreconditionerOracle& p, const Vector& y) {
  const Vector x = problem.root(y);
  const Matrix f1 = problem.jac_x(x, y);
  Matrix e = Matrix::Identity(problem.dx(), problem.dx());
  for (Index j = 0; j < problem.dx(); ++j) e.col(j) -= p.solve(x, y, f1.col(j));
  return e;
}

Matrix precond_jacobian_at_root(const BilevelProblem& problem, const PreconditionerOracle& p, const Vector& y) {
  return vanilla_jacobian_analytic(problem, y) * precond_error_at_root(problem, p, y);
}

Matrix psi1_g1_contract_fd(const BilevelProblem& problem, const PsiMap& psi_map, const Vector& y) {
  const Vector x = problem.root(y);
  const Vector g1 = problem.outer_grad_x(x, y);
  return fd_jacobian_x([&](const Vector& xs) -> Matrix { return psi_map(xs, y) * g1; }, x, default_jacobian_eps(x));
}

double psi_efficiency_constant(const BilevelProblem& problem, const PsiMap& psi_map, const Vector& y) {
  const Vector x = problem.root(y);
  return spectral_norm(
      fd_jacobian_x([&](const Vector& xs) -> Matrix { return psi_map(xs, y); }, x, default_jacobian_eps(x)));
}

namespace {

struct Ingredients {
  Matrix jac_p;
  Matrix jac_phi;
  SingularTriple top_p;
  SingularTriple top_phi;
  Matrix d;
  Matrix psi1g1;
  Matrix ep;
  Matrix psi1g1_phi;
};

Ingredients gather(const BilevelProblem& problem, const PrecondPtr& p, const ReparamFactory& phi, const Vector& y) {
  Ingredients in;
  in.jac_p = estimator_jacobian_fd(precond_estimator(problem, p), problem, y);
  in.jac_phi = estimator_jacobian_fd(reparam_estimator(problem, phi), problem, y);
  in.top_p = top_singular(in.jac_p);
  in.top_phi = top_singular(in.jac_phi);
  in.d = d_matrix(problem, y);
  in.psi1g1 = psi1_g1_analytic(problem, y);
  in.ep = precond_error_at_root(problem, *p, y);
  in.psi1g1_phi = psi1_g1_contract_fd(problem, reparam_psi_map(problem, phi), y);
  return in;
}

}  // namespace

ComparisonBounds compare_bounds(const BilevelProblem& problem, const PrecondPtr& p, const ReparamFactory& phi,
                                const Vector& y) {
  const Ingredients in = gather(problem, p, phi, y);
  ComparisonBounds out;
  out.c_p = in.top_p.value;
  out.c_phi = in.top_phi.value;
  out.v_p = in.top_p.right;
  out.v_phi = in.top_phi.right;

  const Matrix de = in.d * in.ep;
  const Matrix se = in.psi1g1 * in.ep;
  const Matrix u_plus = in.d + de + in.psi1g1_phi + se;
  const Matrix u_minus = in.d - de + in.psi1g1_phi - se;
  const Matrix v_plus = de + in.d + se + in.psi1g1_phi;
  const Matrix v_minus = de - in.d + se - in.psi1g1_phi;

  out.lhs_phi_minus_p = out.c_phi * out.c_phi - out.c_p * out.c_p;
  out.rhs_phi_minus_p = (u_plus * out.v_p).dot(u_minus * out.v_p);
  out.lhs_p_minus_phi = -out.lhs_phi_minus_p;
  out.rhs_p_minus_phi = (v_plus * out.v_phi).dot(v_minus * out.v_phi);
  return out;
}

GapReport delta_gap(const BilevelProblem& problem, const PrecondPtr& p, const ReparamFactory& phi, const Vector& y) {
  const Ingredients in = gather(problem, p, phi, y);
  const Vector x = problem.root(y);
  GapReport out;
  out.parameter = spectral_norm(p->matrix(x, y) - problem.jac_x(x, y));
  out.lower_bound = ((in.d + in.psi1g1_phi) * in.top_p.right).squaredNorm();
  out.lhs = in.top_phi.value * in.top_phi.value - in.top_p.value * in.top_p.value;
  const double a = spectral_norm(in.d + in.psi1g1);
  const double e = spectral_norm(in.ep);
  out.remainder = a * a * e * e;
  return out;
}

GapReport sigma_gap(const BilevelProblem& problem, const PrecondPtr& p, const SpecPtr& spec, const Vector& y) {
  const ReparamFactory phi = spec_factory(spec);
  const Ingredients in = gather(problem, p, phi, y);
  const Vector x = problem.root(y);
  const Vector& v = in.top_phi.right;
  GapReport out;
  out.parameter = problem.outer_grad_x(x, y).norm() * psi_efficiency_constant(problem, reparam_psi_map(problem, phi), y);
  out.lower_bound = ((in.d + in.psi1g1) * in.ep * v).squaredNorm() - (in.d * v).squaredNorm();
  out.lhs = in.top_p.value * in.top_p.value - in.top_phi.value * in.top_phi.value;
  const double dv = (in.d * v).norm();
  out.remainder = 2.0 * dv * out.parameter + out.parameter * out.parameter;
  return out;
}

OuterInnerBound outer_inner_bound(const BilevelProblem& problem, const Vector& y) {
  const Vector x = problem.root(y);
  OuterInnerBound out;
  out.c_omega = spectral_norm(estimator_jacobian_fd(make_estimator(problem, Strategy::vanilla), problem, y));
  out.rhs = spectral_norm(d_matrix(problem, y)) +
            problem.outer_grad_x(x, y).norm() * psi_efficiency_constant(problem, vanilla_psi_map(problem), y);
  return out;
}

double NewtonReparamErrors::max() const { return std::max({e_q, e_q1, e_q11, e_r, e_r2}); }

NewtonReparamErrors newton_reparam_error_terms(const BilevelProblem& problem, const SpecPtr& spec, const Vector& y) {
  const Index n = problem.dx();
  const Vector x = problem.root(y);
  const Vector z = anchored_reparam(spec, x, y)->inverse(x, y);
  const LU lu(problem.jac_x(x, y), "F_1");
  const Matrix f1 = problem.jac_x(x, y);

  NewtonReparamErrors out;
  out.e_q = (spec->q(z, y) + problem.residual(x, y)).norm();
  out.e_q1 = spectral_norm(spec->q_jac(z, y) + f1);
  out.e_r = spectral_norm(spec->r(x, y) - lu.solve(Matrix::Identity(n, n)));

  Rng rng(12);
  for (int probe = 0; probe < 8; ++probe) {
    Vector w(n);
    for (Index i = 0; i < n; ++i) w(i) = rng.normal();
    w /= w.norm();
    out.e_q11 = std::max(out.e_q11, spectral_norm(spec->q_hess_contract(z, y, w) +
                                                  residual_hessian_contract(problem, x, y, w)));
    // Newton-like R_2 contracted on the left: -F_1^{-T} (dF_1/dy_e)^T F_1^{-T} w
    const Vector a = lu.solve_transposed(w);
    Matrix target(n, problem.dy());
    for (Index e = 0; e < problem.dy(); ++e) {
      target.col(e) = -lu.solve_transposed(problem.djac_x_dir_y(x, y, unit(problem.dy(), e)).transpose() * a);
    }
    out.e_r2 = std::max(out.e_r2, spectral_norm(spec->r2_contract_left(x, y, w) - target));
  }
  return out;
}

double ode1d_residual(const BilevelProblem& problem, const ReparamOracle& phi, const Vector& y) {
  if (problem.dx() != 1 || problem.dy() != 1) throw ContractViolation("ode1d_residual needs d_x = d_y = 1");
  const Vector x = problem.root(y);
  const Vector z = phi.inverse(x, y);
  const Vector one = Vector::Ones(1);
  const double g1 = problem.outer_grad_x(x, y)(0);
  if (g1 == 0.0) throw DomainError("ode1d_residual: g_1 vanishes at the root");
  const double g12 = problem.outer_jac_grad_x_y(x, y)(0, 0);
  const double f1 = problem.jac_x(x, y)(0, 0);
  const double f2 = problem.jac_y(x, y)(0, 0);
  const double f12 = problem.djac_x_dir_y(x, y, one)(0, 0);
  const double p1 = phi.jac_z(z, y)(0, 0);
  const double p2 = phi.jac_y(z, y)(0, 0);
  const double p11 = phi.hess_zz_contract(z, y, one)(0, 0);
  const double p12 = phi.hess_zy_contract(z, y, one)(0, 0);
  const double lhs = p12 / p1 - p2 * p11 / (p1 * p1) - f2 * p11 / (f1 * p1 * p1);
  return lhs - (g12 / g1 - f12 / f1);
}

}  // namespace hypergrad
