#include "hypergrad/models.hpp"

#include "hypergrad/dataset.hpp"
#include "hypergrad/errors.hpp"
#include "hypergrad/linalg.hpp"
#include "hypergrad/random.hpp"

#include <cmath>
#include <memory>

namespace hypergrad {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double sigmoid_prime(double t) { return sigmoid(t) * sigmoid(-t); }

double sigmoid_second(double t) { return sigmoid_prime(t) * (1.0 - 2.0 * sigmoid(t)); }

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

OuterKind parse_outer_kind(const std::string& text) {
  if (text == "quadratic") return OuterKind::quadratic;
  if (text == "affine") return OuterKind::affine;
  throw UsageError("unknown outer variant '" + text + "'");
}

std::string to_string(OuterKind kind) { return kind == OuterKind::quadratic ? "quadratic" : "affine"; }

namespace {

Matrix zeros(Index r, Index c) { return Matrix::Zero(r, c); }

class RidgeInner final : public InnerOracle {
 public:
  RidgeInner(const Matrix& a, const Vector& b) : gram_(2.0 * a.transpose() * a), rhs_(2.0 * a.transpose() * b) {}

  Vector residual(const Vector& x, const Vector& y) const override {
    return gram_ * x - rhs_ + y.array().exp().matrix().cwiseProduct(x);
  }
  Matrix jac_x(const Vector&, const Vector& y) const override {
    Matrix j = gram_;
    j.diagonal() += y.array().exp().matrix();
    return j;
  }
  Matrix jac_y(const Vector& x, const Vector& y) const override {
    return y.array().exp().matrix().cwiseProduct(x).asDiagonal();
  }
  Matrix djac_x_dir_x(const Vector& x, const Vector&, const Vector&) const override {
    return zeros(x.size(), x.size());
  }
  Matrix djac_x_dir_y(const Vector&, const Vector& y, const Vector& e) const override {
    return y.array().exp().matrix().cwiseProduct(e).asDiagonal();
  }
  std::optional<Vector> exact_root(const Vector& y) const override {
    const Matrix j = jac_x(Vector::Zero(rhs_.size()), y);
    LU lu(j, "F_1");
    Vector x = lu.solve(rhs_);
    // one step of iterative refinement
    x -= lu.solve(residual(x, y));
    return x;
  }
  bool affine_in_x() const override { return true; }

 private:
  Matrix gram_;
  Vector rhs_;
};

class LogisticInner final : public InnerOracle {
 public:
  LogisticInner(const Matrix& a, const Vector& b) : a_(a), b_(b) {}

  double objective(const Vector& x, const Vector& y) const {
    const Vector m = margins(x);
    double f = 0.0;
    for (Index i = 0; i < m.size(); ++i) f += softplus(-m(i));
    return f + 0.5 * y.array().exp().matrix().dot(x.cwiseProduct(x));
  }

  Vector residual(const Vector& x, const Vector& y) const override {
    const Vector m = margins(x);
    Vector w(m.size());
    for (Index i = 0; i < m.size(); ++i) w(i) = b_(i) * sigmoid(-m(i));
    return -a_.transpose() * w + y.array().exp().matrix().cwiseProduct(x);
  }
  Matrix jac_x(const Vector& x, const Vector& y) const override {
    const Vector m = margins(x);
    Vector s(m.size());
    for (Index i = 0; i < m.size(); ++i) s(i) = sigmoid_prime(m(i));
    Matrix j = a_.transpose() * s.asDiagonal() * a_;
    j.diagonal() += y.array().exp().matrix();
    return j;
  }
  Matrix jac_y(const Vector& x, const Vector& y) const override {
    return y.array().exp().matrix().cwiseProduct(x).asDiagonal();
  }
  Matrix djac_x_dir_x(const Vector& x, const Vector&, const Vector& u) const override {
    const Vector m = margins(x);
    const Vector au = a_ * u;
    Vector s(m.size());
    for (Index i = 0; i < m.size(); ++i) s(i) = sigmoid_second(m(i)) * b_(i) * au(i);
    return a_.transpose() * s.asDiagonal() * a_;
  }
  Matrix djac_x_dir_y(const Vector&, const Vector& y, const Vector& e) const override {
    return y.array().exp().matrix().cwiseProduct(e).asDiagonal();
  }

  // Damped Newton with Armijo backtracking on the objective. Near the root
  // the objective decrease is below rounding, so a full step that halves the
  // residual is taken without the line search.
  std::optional<Vector> exact_root(const Vector& y) const override {
    Vector x = Vector::Zero(a_.cols());
    Vector f = residual(x, y);
    for (int it = 0; it < 200; ++it) {
      if (f.norm() <= 1e-13 * (1.0 + x.norm())) return x;
      const Vector d = -linear_solve(jac_x(x, y), f, "F_1");
      Vector next = x + d;
      Vector fn = residual(next, y);
      if (!(fn.norm() <= 0.5 * f.norm())) {
        const double slope = f.dot(d);
        const double f0 = objective(x, y);
        double step = 1.0;
        bool accepted = false;
        for (int k = 0; k < 60; ++k, step *= 0.5) {
          if (objective(x + step * d, y) <= f0 + 1e-4 * step * slope) {
            accepted = true;
            break;
          }
        }
        if (!accepted) break;
        next = x + step * d;
        fn = residual(next, y);
      }
      x = std::move(next);
      f = std::move(fn);
    }
    if (f.norm() <= 1e-13 * (1.0 + x.norm())) return x;
    throw NumericalFailure("logistic root solve stalled at residual " + format_double(f.norm()) + " at |x| " + format_double(x.norm()));
  }

 private:
  Vector margins(const Vector& x) const { return b_.cwiseProduct(a_ * x); }

  Matrix a_;
  Vector b_;
};

class QuadraticLossOuter final : public OuterOracle {
 public:
  QuadraticLossOuter(const Matrix& a, const Vector& b, Index dy) : a_(a), b_(b), dy_(dy) {}

  double value(const Vector& x, const Vector&) const override { return (a_ * x - b_).squaredNorm(); }
  Vector grad_x(const Vector& x, const Vector&) const override { return 2.0 * a_.transpose() * (a_ * x - b_); }
  Vector grad_y(const Vector&, const Vector&) const override { return Vector::Zero(dy_); }
  Matrix hess_xx(const Vector&, const Vector&) const override { return 2.0 * a_.transpose() * a_; }
  Matrix jac_grad_y_x(const Vector& x, const Vector&) const override { return zeros(dy_, x.size()); }
  Matrix jac_grad_x_y(const Vector& x, const Vector&) const override { return zeros(x.size(), dy_); }

 private:
  Matrix a_;
  Vector b_;
  Index dy_;
};

class LogisticLossOuter final : public OuterOracle {
 public:
  LogisticLossOuter(const Matrix& a, const Vector& b, Index dy) : a_(a), b_(b), dy_(dy) {}

  double value(const Vector& x, const Vector&) const override {
    const Vector m = b_.cwiseProduct(a_ * x);
    double v = 0.0;
    for (Index i = 0; i < m.size(); ++i) v += softplus(-m(i));
    return v;
  }
  Vector grad_x(const Vector& x, const Vector&) const override {
    const Vector m = b_.cwiseProduct(a_ * x);
    Vector w(m.size());
    for (Index i = 0; i < m.size(); ++i) w(i) = b_(i) * sigmoid(-m(i));
    return -a_.transpose() * w;
  }
  Vector grad_y(const Vector&, const Vector&) const override { return Vector::Zero(dy_); }
  Matrix hess_xx(const Vector& x, const Vector&) const override {
    const Vector m = b_.cwiseProduct(a_ * x);
    Vector s(m.size());
    for (Index i = 0; i < m.size(); ++i) s(i) = sigmoid_prime(m(i));
    return a_.transpose() * s.asDiagonal() * a_;
  }
  Matrix jac_grad_y_x(const Vector& x, const Vector&) const override { return zeros(dy_, x.size()); }
  Matrix jac_grad_x_y(const Vector& x, const Vector&) const override { return zeros(x.size(), dy_); }

 private:
  Matrix a_;
  Vector b_;
  Index dy_;
};

class AffineOuter final : public OuterOracle {
 public:
  AffineOuter(Vector a, Index dy) : a_(std::move(a)), dy_(dy) {}

  double value(const Vector& x, const Vector&) const override { return a_.dot(x); }
  Vector grad_x(const Vector&, const Vector&) const override { return a_; }
  Vector grad_y(const Vector&, const Vector&) const override { return Vector::Zero(dy_); }
  Matrix hess_xx(const Vector& x, const Vector&) const override { return zeros(x.size(), x.size()); }
  Matrix jac_grad_y_x(const Vector& x, const Vector&) const override { return zeros(dy_, x.size()); }
  Matrix jac_grad_x_y(const Vector& x, const Vector&) const override { return zeros(x.size(), dy_); }

 private:
  Vector a_;
  Index dy_;
};

class ScalarRidgeInner final : public InnerOracle {
 public:
  Vector residual(const Vector& x, const Vector& y) const override {
    return Vector::Constant(1, (x(0) - 1.0) + std::exp(y(0)) * x(0));
  }
  Matrix jac_x(const Vector&, const Vector& y) const override { return Matrix::Constant(1, 1, 1.0 + std::exp(y(0))); }
  Matrix jac_y(const Vector& x, const Vector& y) const override { return Matrix::Constant(1, 1, std::exp(y(0)) * x(0)); }
  Matrix djac_x_dir_x(const Vector&, const Vector&, const Vector&) const override { return zeros(1, 1); }
  Matrix djac_x_dir_y(const Vector&, const Vector& y, const Vector& e) const override {
    return Matrix::Constant(1, 1, std::exp(y(0)) * e(0));
  }
  std::optional<Vector> exact_root(const Vector& y) const override {
    return Vector::Constant(1, 1.0 / (1.0 + std::exp(y(0))));
  }
  bool affine_in_x() const override { return true; }
};

class HalfSquareOuter final : public OuterOracle {
 public:
  double value(const Vector& x, const Vector&) const override { return 0.5 * x(0) * x(0); }
  Vector grad_x(const Vector& x, const Vector&) const override { return x; }
  Vector grad_y(const Vector&, const Vector&) const override { return Vector::Zero(1); }
  Matrix hess_xx(const Vector&, const Vector&) const override { return Matrix::Identity(1, 1); }
  Matrix jac_grad_y_x(const Vector&, const Vector&) const override { return zeros(1, 1); }
  Matrix jac_grad_x_y(const Vector&, const Vector&) const override { return zeros(1, 1); }
};

class Linear1dInner final : public InnerOracle {
 public:
  Vector residual(const Vector& x, const Vector& y) const override {
    return Vector::Constant(1, std::exp(y(0)) * x(0) - 1.0);
  }
  Matrix jac_x(const Vector&, const Vector& y) const override { return Matrix::Constant(1, 1, std::exp(y(0))); }
  Matrix jac_y(const Vector& x, const Vector& y) const override { return Matrix::Constant(1, 1, std::exp(y(0)) * x(0)); }
  Matrix djac_x_dir_x(const Vector&, const Vector&, const Vector&) const override { return zeros(1, 1); }
  Matrix djac_x_dir_y(const Vector&, const Vector& y, const Vector& e) const override {
    return Matrix::Constant(1, 1, std::exp(y(0)) * e(0));
  }
  std::optional<Vector> exact_root(const Vector& y) const override {
    return Vector::Constant(1, std::exp(-y(0)));
  }
  bool affine_in_x() const override { return true; }
};

void check_pair(const Dataset& train, const Dataset& val) {
  if (train.n() < 1 || train.dims() < 1) throw ContractViolation("training set is empty");
  if (val.n() < 1) throw ContractViolation("validation set is empty");
  if (train.dims() != val.dims()) {
    throw ContractViolation("train has " + std::to_string(train.dims()) + " features, validation has " +
                            std::to_string(val.dims()));
  }
}

Vector affine_weights(std::optional<Vector> a, Index d) {
  if (!a) return Vector::Ones(d);
  if (a->size() != d) throw ContractViolation("affine outer weights have the wrong length");
  return *a;
}

}  // namespace

BilevelProblem make_ridge(const Dataset& train, const Dataset& val, OuterKind outer, std::optional<Vector> affine_a) {
  check_pair(train, val);
  const Index d = train.dims();
  auto inner = std::make_shared<RidgeInner>(train.features, train.labels);
  std::shared_ptr<const OuterOracle> g;
  if (outer == OuterKind::quadratic) {
    g = std::make_shared<QuadraticLossOuter>(val.features, val.labels, d);
  } else {
    g = std::make_shared<AffineOuter>(affine_weights(std::move(affine_a), d), d);
  }
  return BilevelProblem(inner, g, d, d, "ridge");
}

BilevelProblem make_logistic(const Dataset& train, const Dataset& val, OuterKind outer,
                             std::optional<Vector> affine_a) {
  check_pair(train, val);
  require_binary_labels(train);
  const Index d = train.dims();
  auto inner = std::make_shared<LogisticInner>(train.features, train.labels);
  std::shared_ptr<const OuterOracle> g;
  if (outer == OuterKind::quadratic) {
    require_binary_labels(val);
    g = std::make_shared<LogisticLossOuter>(val.features, val.labels, d);
  } else {
    g = std::make_shared<AffineOuter>(affine_weights(std::move(affine_a), d), d);
  }
  return BilevelProblem(inner, g, d, d, "logistic");
}

BilevelProblem make_scalar_ridge() {
  return BilevelProblem(std::make_shared<ScalarRidgeInner>(), std::make_shared<HalfSquareOuter>(), 1, 1, "scalar");
}

BilevelProblem make_linear1d() {
  return BilevelProblem(std::make_shared<Linear1dInner>(), std::make_shared<AffineOuter>(Vector::Ones(1), 1), 1, 1,
                        "linear1d");
}

Dataset random_validation(Index n, Index d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw ContractViolation("random_validation needs positive sizes");
  Rng rng(seed);
  Dataset out;
  out.features.resize(n, d);
  out.labels.resize(n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) out.features(i, j) = rng.normal();
  for (Index i = 0; i < n; ++i) out.labels(i) = rng.normal();
  return out;
}

Vector sample_y(Index d, double low, double high, std::uint64_t seed) {
  if (d < 1) throw UsageError("sample_y: dimension must be positive");
  if (!std::isfinite(low) || !std::isfinite(high) || !(low < high)) {
    throw UsageError("sample_y: need finite low < high");
  }
  Rng rng(seed);
  Vector y(d);
  for (Index i = 0; i < d; ++i) y(i) = rng.uniform(low, high);
  return y;
}

}  // namespace hypergrad
