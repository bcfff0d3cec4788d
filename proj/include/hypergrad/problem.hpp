#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace hypergrad {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Inner residual F(x, y) and its derivatives. x has d_x entries, y has d_y.
///
/// Second derivatives are only exposed as directional derivatives of the
/// Jacobian in x, which is the granularity every estimator consumes:
///   djac_x_dir_x(x, y, u) = d/dt jac_x(x + t u, y) at t = 0
///   djac_x_dir_y(x, y, e) = d/dt jac_x(x, y + t e) at t = 0
/// Implementations must be pure: no mutable state, safe for concurrent reads.
class InnerOracle {
 public:
  virtual ~InnerOracle() = default;

  virtual Vector residual(const Vector& x, const Vector& y) const = 0;
  virtual Matrix jac_x(const Vector& x, const Vector& y) const = 0;
  virtual Matrix jac_y(const Vector& x, const Vector& y) const = 0;
  virtual Matrix djac_x_dir_x(const Vector& x, const Vector& y, const Vector& u) const = 0;
  virtual Matrix djac_x_dir_y(const Vector& x, const Vector& y, const Vector& e) const = 0;

  /// Direct solve of F(., y) = 0 when the problem admits one.
  virtual std::optional<Vector> exact_root(const Vector& /*y*/) const { return std::nullopt; }

  /// True when F is affine in x (jac_x independent of x).
  virtual bool affine_in_x() const { return false; }
};

/// Outer objective g(x, y) and its derivatives.
class OuterOracle {
 public:
  virtual ~OuterOracle() = default;

  virtual double value(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_x(const Vector& x, const Vector& y) const = 0;
  virtual Vector grad_y(const Vector& x, const Vector& y) const = 0;
  virtual Matrix hess_xx(const Vector& x, const Vector& y) const = 0;
  /// d(grad_y)/dx, shape d_y x d_x.
  virtual Matrix jac_grad_y_x(const Vector& x, const Vector& y) const = 0;
  /// d(grad_x)/dy, shape d_x x d_y.
  virtual Matrix jac_grad_x_y(const Vector& x, const Vector& y) const = 0;
};

/// A bilevel program: minimize h(y) = g(x*(y), y) subject to F(x*(y), y) = 0.
///
/// Every accessor checks input and output shapes (ContractViolation) and that
/// oracle outputs are finite (NumericalFailure). The value is cheap to copy;
/// the oracles are shared and immutable.
class BilevelProblem {
 public:
  BilevelProblem(std::shared_ptr<const InnerOracle> inner, std::shared_ptr<const OuterOracle> outer,
                 Index dx, Index dy, std::string name = "problem");

  Index dx() const { return dx_; }
  Index dy() const { return dy_; }
  const std::string& name() const { return name_; }

  Vector residual(const Vector& x, const Vector& y) const;
  Matrix jac_x(const Vector& x, const Vector& y) const;
  Matrix jac_y(const Vector& x, const Vector& y) const;
  Matrix djac_x_dir_x(const Vector& x, const Vector& y, const Vector& u) const;
  Matrix djac_x_dir_y(const Vector& x, const Vector& y, const Vector& e) const;
  std::optional<Vector> exact_root(const Vector& y) const;
  /// exact_root or CapabilityError.
  Vector root(const Vector& y) const;
  bool affine_in_x() const { return inner_->affine_in_x(); }

  double outer_value(const Vector& x, const Vector& y) const;
  Vector outer_grad_x(const Vector& x, const Vector& y) const;
  Vector outer_grad_y(const Vector& x, const Vector& y) const;
  Matrix outer_hess_xx(const Vector& x, const Vector& y) const;
  Matrix outer_jac_grad_y_x(const Vector& x, const Vector& y) const;
  Matrix outer_jac_grad_x_y(const Vector& x, const Vector& y) const;

  const InnerOracle& inner() const { return *inner_; }
  const OuterOracle& outer() const { return *outer_; }

 private:
  void check_point(const Vector& x, const Vector& y, const char* what) const;

  std::shared_ptr<const InnerOracle> inner_;
  std::shared_ptr<const OuterOracle> outer_;
  Index dx_;
  Index dy_;
  std::string name_;
};

/// H_ij = sum_k w_k d^2 F_k / dx_i dx_j, assembled from directional derivatives.
Matrix residual_hessian_contract(const BilevelProblem& problem, const Vector& x, const Vector& y,
                                 const Vector& w);

bool all_finite(const Matrix& m);

/// Max relative mismatch of every analytic derivative oracle against a central
/// difference of its parent quantity, keyed by oracle name.
struct OracleCheckReport {
  std::map<std::string, double> mismatch;

  double worst() const;
};

OracleCheckReport validate_oracles(const BilevelProblem& problem, const Vector& x, const Vector& y,
                                   double step);

/// InnerOracle backed by central differences of a user residual. Jacobians use
/// step 1e-6 * (1 + |x|); second derivatives difference the FD Jacobian with a
/// wider step.
class FiniteDifferenceInner final : public InnerOracle {
 public:
  using Residual = std::function<Vector(const Vector&, const Vector&)>;
  using Root = std::function<Vector(const Vector&)>;

  FiniteDifferenceInner(Residual residual, Index dx, Index dy, Root root = {});

  Vector residual(const Vector& x, const Vector& y) const override;
  Matrix jac_x(const Vector& x, const Vector& y) const override;
  Matrix jac_y(const Vector& x, const Vector& y) const override;
  Matrix djac_x_dir_x(const Vector& x, const Vector& y, const Vector& u) const override;
  Matrix djac_x_dir_y(const Vector& x, const Vector& y, const Vector& e) const override;
  std::optional<Vector> exact_root(const Vector& y) const override;

 private:
  Residual residual_;
  Root root_;
  Index dx_;
  Index dy_;
};

}  // namespace hypergrad
