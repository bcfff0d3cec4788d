#pragma once

#include "hypergrad/problem.hpp"

#include <functional>
#include <memory>
#include <string>

namespace hypergrad {

/// Change of variable x = phi(z, y).
///
/// hess_zz_contract(z, y, w)_ij = sum_k w_k d2 phi_k / dz_i dz_j
/// hess_zy_contract(z, y, w)_ie = sum_k w_k d2 phi_k / dz_i dy_e
class ReparamOracle {
 public:
  virtual ~ReparamOracle() = default;

  virtual Vector forward(const Vector& z, const Vector& y) const = 0;
  /// DomainError when x is outside the range of phi(., y).
  virtual Vector inverse(const Vector& x, const Vector& y) const = 0;
  virtual Matrix jac_z(const Vector& z, const Vector& y) const = 0;
  virtual Matrix jac_y(const Vector& z, const Vector& y) const = 0;
  virtual Matrix hess_zz_contract(const Vector& z, const Vector& y, const Vector& w) const = 0;
  virtual Matrix hess_zy_contract(const Vector& z, const Vector& y, const Vector& w) const = 0;
};

using ReparamPtr = std::shared_ptr<const ReparamOracle>;

ReparamPtr identity_reparam(Index dx, Index dy);

/// phi_k(z) = alpha_k exp(beta_k z_k), independent of y. Requires
/// alpha_k != 0 and beta_k != 0.
ReparamPtr exp_family_reparam(const Vector& alpha, const Vector& beta, Index dy);

/// sign(anchor) * exp(z). A zero anchor coordinate is a DomainError.
ReparamPtr exp_reparam(const Vector& anchor, Index dy);

/// Separable localized map psi(z, y) = R(xbar, y) Q(z, ybar) [+ xbar].
///
/// r2_contract_left(x, y, w)_{me}  = sum_k w_k dR_km / dy_e
/// r2_contract_right(x, y, q)_{ke} = sum_m dR_km / dy_e q_m
class SeparableReparamSpec {
 public:
  virtual ~SeparableReparamSpec() = default;

  virtual std::string name() const = 0;
  virtual bool offset() const = 0;

  virtual Matrix r(const Vector& x, const Vector& y) const = 0;
  virtual Vector r_apply(const Vector& x, const Vector& y, const Vector& v) const { return r(x, y) * v; }
  virtual Vector r_transpose_apply(const Vector& x, const Vector& y, const Vector& w) const {
    return r(x, y).transpose() * w;
  }
  virtual Vector r_solve(const Vector& x, const Vector& y, const Vector& v) const;
  virtual Matrix r2_contract_left(const Vector& x, const Vector& y, const Vector& w) const = 0;
  virtual Matrix r2_contract_right(const Vector& x, const Vector& y, const Vector& q) const = 0;

  virtual Vector q(const Vector& z, const Vector& ybar) const = 0;
  virtual Matrix q_jac(const Vector& z, const Vector& ybar) const = 0;
  virtual Matrix q_hess_contract(const Vector& z, const Vector& ybar, const Vector& w) const = 0;
  virtual Vector q_inverse(const Vector& v, const Vector& ybar) const = 0;
};

using SpecPtr = std::shared_ptr<const SeparableReparamSpec>;

/// R = diag(F_1)^{-1}, Q(z) = z, no offset.
SpecPtr diag_reparam(const BilevelProblem& problem);

/// R = F_1^{-1} + shift * I, Q(z, ybar) = -F(z, ybar), with offset. shift = 0
/// is the Newton-like map; a nonzero shift perturbs R only.
///
/// q_inverse solves -F(z, ybar) = v: a linear solve when F is affine in x,
/// the exact root when v is zero, otherwise CapabilityError.
SpecPtr opt_reparam(const BilevelProblem& problem, double shift = 0.0);

/// Freezes the anchor (xbar, ybar) of a separable spec.
ReparamPtr anchored_reparam(SpecPtr spec, const Vector& xbar, const Vector& ybar);

}  // namespace hypergrad
