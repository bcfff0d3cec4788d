#include "hypergrad/problem.hpp"

#include "hypergrad/errors.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace hypergrad {

namespace {

std::string shape(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename M>
M checked(M value, Index rows, Index cols, const char* what) {
  if (value.rows() != rows || value.cols() != cols) {
    throw ContractViolation(std::string(what) + " returned shape " + shape(value.rows(), value.cols()) +
                            ", expected " + shape(rows, cols));
  }
  if (!all_finite(value)) {
    throw NumericalFailure(std::string(what) + " returned a non-finite value");
  }
  return value;
}

void check_size(const Vector& v, Index n, const char* what) {
  if (v.size() != n) {
    throw ContractViolation(std::string(what) + " has length " + std::to_string(v.size()) +
                            ", expected " + std::to_string(n));
  }
}

double mismatch(const Matrix& analytic, const Matrix& fd) {
  if (analytic.size() == 0) return 0.0;
  const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
  return (analytic - fd).cwiseAbs().maxCoeff() / scale;
}

Vector unit(Index n, Index j) {
  Vector e = Vector::Zero(n);
  e(j) = 1.0;
  return e;
}

// Central difference of a matrix-valued map along `dir`.
template <typename Fn>
Matrix central_diff(Fn&& fn, const Vector& base, const Vector& dir, double h) {
  const Vector plus = base + h * dir;
  const Vector minus = base - h * dir;
  return (fn(plus) - fn(minus)) / (2.0 * h);
}

}  // namespace

bool all_finite(const Matrix& m) { return m.allFinite(); }

BilevelProblem::BilevelProblem(std::shared_ptr<const InnerOracle> inner,
                               std::shared_ptr<const OuterOracle> outer, Index dx, Index dy,
                               std::string name)
    : inner_(std::move(inner)), outer_(std::move(outer)), dx_(dx), dy_(dy), name_(std::move(name)) {
  if (!inner_ || !outer_) throw ContractViolation("BilevelProblem needs both oracles");
  if (dx_ < 1 || dy_ < 1) throw ContractViolation("BilevelProblem dimensions must be positive");
}

void BilevelProblem::check_point(const Vector& x, const Vector& y, const char* what) const {
  check_size(x, dx_, what);
  check_size(y, dy_, what);
}

Vector BilevelProblem::residual(const Vector& x, const Vector& y) const {
  check_point(x, y, "residual input");
  return checked<Vector>(inner_->residual(x, y), dx_, 1, "residual");
}

Matrix BilevelProblem::jac_x(const Vector& x, const Vector& y) const {
  check_point(x, y, "jac_x input");
  return checked<Matrix>(inner_->jac_x(x, y), dx_, dx_, "jac_x");
}

Matrix BilevelProblem::jac_y(const Vector& x, const Vector& y) const {
  check_point(x, y, "jac_y input");
  return checked<Matrix>(inner_->jac_y(x, y), dx_, dy_, "jac_y");
}

Matrix BilevelProblem::djac_x_dir_x(const Vector& x, const Vector& y, const Vector& u) const {
  check_point(x, y, "djac_x_dir_x input");
  check_size(u, dx_, "djac_x_dir_x direction");
  return checked<Matrix>(inner_->djac_x_dir_x(x, y, u), dx_, dx_, "djac_x_dir_x");
}

Matrix BilevelProblem::djac_x_dir_y(const Vector& x, const Vector& y, const Vector& e) const {
  check_point(x, y, "djac_x_dir_y input");
  check_size(e, dy_, "djac_x_dir_y direction");
  return checked<Matrix>(inner_->djac_x_dir_y(x, y, e), dx_, dx_, "djac_x_dir_y");
}

std::optional<Vector> BilevelProblem::exact_root(const Vector& y) const {
  check_size(y, dy_, "exact_root input");
  auto root = inner_->exact_root(y);
  if (root) *root = checked<Vector>(std::move(*root), dx_, 1, "exact_root");
  return root;
}

Vector BilevelProblem::root(const Vector& y) const {
  auto r = exact_root(y);
  if (!r) throw CapabilityError(name_ + " has no exact root oracle");
  return *r;
}

double BilevelProblem::outer_value(const Vector& x, const Vector& y) const {
  check_point(x, y, "outer value input");
  const double v = outer_->value(x, y);
  if (!std::isfinite(v)) throw NumericalFailure("outer value is non-finite");
  return v;
}

Vector BilevelProblem::outer_grad_x(const Vector& x, const Vector& y) const {
  check_point(x, y, "outer grad_x input");
  return checked<Vector>(outer_->grad_x(x, y), dx_, 1, "outer grad_x");
}

Vector BilevelProblem::outer_grad_y(const Vector& x, const Vector& y) const {
  check_point(x, y, "outer grad_y input");
  return checked<Vector>(outer_->grad_y(x, y), dy_, 1, "outer grad_y");
}

Matrix BilevelProblem::outer_hess_xx(const Vector& x, const Vector& y) const {
  check_point(x, y, "outer hess_xx input");
  return checked<Matrix>(outer_->hess_xx(x, y), dx_, dx_, "outer hess_xx");
}

Matrix BilevelProblem::outer_jac_grad_y_x(const Vector& x, const Vector& y) const {
  check_point(x, y, "outer jac_grad_y_x input");
  return checked<Matrix>(outer_->jac_grad_y_x(x, y), dy_, dx_, "outer jac_grad_y_x");
}

Matrix BilevelProblem::outer_jac_grad_x_y(const Vector& x, const Vector& y) const {
  check_point(x, y, "outer jac_grad_x_y input");
  return checked<Matrix>(outer_->jac_grad_x_y(x, y), dx_, dy_, "outer jac_grad_x_y");
}

Matrix residual_hessian_contract(const BilevelProblem& problem, const Vector& x, const Vector& y,
                                 const Vector& w) {
  const Index n = problem.dx();
  Matrix h(n, n);
  for (Index j = 0; j < n; ++j) {
    // column j: sum_k w_k d^2F_k/dx_i dx_j = (d_{x_j} F_1)^T w
    h.col(j) = problem.djac_x_dir_x(x, y, unit(n, j)).transpose() * w;
  }
  return h;
}

double OracleCheckReport::worst() const {
  double w = 0.0;
  for (const auto& [name, value] : mismatch) w = std::max(w, value);
  return w;
}

OracleCheckReport validate_oracles(const BilevelProblem& p, const Vector& x, const Vector& y,
                                   double step) {
  if (!(step > 0.0)) throw ContractViolation("validate_oracles: step must be positive");
  if (!x.allFinite() || !y.allFinite()) throw ContractViolation("validate_oracles: non-finite point");

  const Index dx = p.dx();
  const Index dy = p.dy();
  OracleCheckReport report;

  auto in_x = [&](auto fn) { return [&, fn](const Vector& xs) -> Matrix { return fn(xs, y); }; };
  auto in_y = [&](auto fn) { return [&, fn](const Vector& ys) -> Matrix { return fn(x, ys); }; };
  auto residual = [&](const Vector& a, const Vector& b) -> Matrix { return p.residual(a, b); };
  auto jac_x = [&](const Vector& a, const Vector& b) -> Matrix { return p.jac_x(a, b); };
  auto value = [&](const Vector& a, const Vector& b) -> Matrix {
    return Matrix::Constant(1, 1, p.outer_value(a, b));
  };
  auto grad_x = [&](const Vector& a, const Vector& b) -> Matrix { return p.outer_grad_x(a, b); };
  auto grad_y = [&](const Vector& a, const Vector& b) -> Matrix { return p.outer_grad_y(a, b); };

  // Jacobian of a vector map by columns.
  auto fd_jacobian = [&](auto fn, const Vector& base, Index n) {
    Matrix first = fn(base);
    Matrix jac(first.rows(), n);
    for (Index j = 0; j < n; ++j) jac.col(j) = central_diff(fn, base, unit(n, j), step);
    return jac;
  };

  report.mismatch["residual.jac_x"] = mismatch(p.jac_x(x, y), fd_jacobian(in_x(residual), x, dx));
  report.mismatch["residual.jac_y"] = mismatch(p.jac_y(x, y), fd_jacobian(in_y(residual), y, dy));

  double worst_xx = 0.0;
  for (Index j = 0; j < dx; ++j) {
    const Vector u = unit(dx, j);
    worst_xx = std::max(worst_xx, mismatch(p.djac_x_dir_x(x, y, u), central_diff(in_x(jac_x), x, u, step)));
  }
  report.mismatch["residual.djac_x_dir_x"] = worst_xx;

  double worst_xy = 0.0;
  for (Index j = 0; j < dy; ++j) {
    const Vector e = unit(dy, j);
    worst_xy = std::max(worst_xy, mismatch(p.djac_x_dir_y(x, y, e), central_diff(in_y(jac_x), y, e, step)));
  }
  report.mismatch["residual.djac_x_dir_y"] = worst_xy;

  report.mismatch["outer.grad_x"] =
      mismatch(p.outer_grad_x(x, y).transpose(), fd_jacobian(in_x(value), x, dx));
  report.mismatch["outer.grad_y"] =
      mismatch(p.outer_grad_y(x, y).transpose(), fd_jacobian(in_y(value), y, dy));
  report.mismatch["outer.hess_xx"] = mismatch(p.outer_hess_xx(x, y), fd_jacobian(in_x(grad_x), x, dx));
  report.mismatch["outer.jac_grad_y_x"] =
      mismatch(p.outer_jac_grad_y_x(x, y), fd_jacobian(in_x(grad_y), x, dx));
  report.mismatch["outer.jac_grad_x_y"] =
      mismatch(p.outer_jac_grad_x_y(x, y), fd_jacobian(in_y(grad_x), y, dy));
  return report;
}

FiniteDifferenceInner::FiniteDifferenceInner(Residual residual, Index dx, Index dy, Root root)
    : residual_(std::move(residual)), root_(std::move(root)), dx_(dx), dy_(dy) {
  if (!residual_) throw ContractViolation("FiniteDifferenceInner needs a residual");
}

Vector FiniteDifferenceInner::residual(const Vector& x, const Vector& y) const { return residual_(x, y); }

Matrix FiniteDifferenceInner::jac_x(const Vector& x, const Vector& y) const {
  const double h = 1e-6 * (1.0 + x.norm());
  Matrix jac(dx_, dx_);
  for (Index j = 0; j < dx_; ++j) {
    jac.col(j) = central_diff([&](const Vector& xs) -> Matrix { return residual_(xs, y); }, x, unit(dx_, j), h);
  }
  return jac;
}

Matrix FiniteDifferenceInner::jac_y(const Vector& x, const Vector& y) const {
  const double h = 1e-6 * (1.0 + y.norm());
  Matrix jac(dx_, dy_);
  for (Index j = 0; j < dy_; ++j) {
    jac.col(j) = central_diff([&](const Vector& ys) -> Matrix { return residual_(x, ys); }, y, unit(dy_, j), h);
  }
  return jac;
}

Matrix FiniteDifferenceInner::djac_x_dir_x(const Vector& x, const Vector& y, const Vector& u) const {
  const double un = u.norm();
  if (un == 0.0) return Matrix::Zero(dx_, dx_);
  const double h = 1e-4 * (1.0 + x.norm()) / un;
  return central_diff([&](const Vector& xs) { return jac_x(xs, y); }, x, u, h);
}

Matrix FiniteDifferenceInner::djac_x_dir_y(const Vector& x, const Vector& y, const Vector& e) const {
  const double en = e.norm();
  if (en == 0.0) return Matrix::Zero(dx_, dx_);
  const double h = 1e-4 * (1.0 + y.norm()) / en;
  return central_diff([&](const Vector& ys) { return jac_x(x, ys); }, y, e, h);
}

std::optional<Vector> FiniteDifferenceInner::exact_root(const Vector& y) const {
  if (!root_) return std::nullopt;
  return root_(y);
}

}  // namespace hypergrad
