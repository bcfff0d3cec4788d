#include "hypergrad/reparam.hpp"

#include "hypergrad/errors.hpp"
#include "hypergrad/linalg.hpp"

#include <cmath>
#include <utility>

namespace hypergrad {

namespace {

Vector unit(Index n, Index j) {
  Vector e = Vector::Zero(n);
  e(j) = 1.0;
  return e;
}

class IdentityReparam final : public ReparamOracle {
 public:
  IdentityReparam(Index dx, Index dy) : dx_(dx), dy_(dy) {}

  Vector forward(const Vector& z, const Vector&) const override { return z; }
  Vector inverse(const Vector& x, const Vector&) const override { return x; }
  Matrix jac_z(const Vector&, const Vector&) const override { return Matrix::Identity(dx_, dx_); }
  Matrix jac_y(const Vector&, const Vector&) const override { return Matrix::Zero(dx_, dy_); }
  Matrix hess_zz_contract(const Vector&, const Vector&, const Vector&) const override {
    return Matrix::Zero(dx_, dx_);
  }
  Matrix hess_zy_contract(const Vector&, const Vector&, const Vector&) const override {
    return Matrix::Zero(dx_, dy_);
  }

 private:
  Index dx_;
  Index dy_;
};

class ExpReparam final : public ReparamOracle {
 public:
  ExpReparam(Vector alpha, Vector beta, Index dy) : alpha_(std::move(alpha)), beta_(std::move(beta)), dy_(dy) {
    if (alpha_.size() != beta_.size()) throw ContractViolation("exp reparam: alpha and beta lengths differ");
    for (Index k = 0; k < alpha_.size(); ++k) {
      if (alpha_(k) == 0.0 || beta_(k) == 0.0 || !std::isfinite(alpha_(k)) || !std::isfinite(beta_(k))) {
        throw DomainError("exp reparam: alpha and beta must be finite and nonzero");
      }
    }
  }

  Vector forward(const Vector& z, const Vector&) const override {
    return alpha_.cwiseProduct(beta_.cwiseProduct(z).array().exp().matrix());
  }
  Vector inverse(const Vector& x, const Vector&) const override {
    Vector z(x.size());
    for (Index k = 0; k < x.size(); ++k) {
      const double ratio = x(k) / alpha_(k);
      if (!(ratio > 0.0)) throw DomainError("exp reparam: coordinate " + std::to_string(k) + " outside range");
      z(k) = std::log(ratio) / beta_(k);
    }
    return z;
  }
  Matrix jac_z(const Vector& z, const Vector& y) const override {
    return beta_.cwiseProduct(forward(z, y)).asDiagonal();
  }
  Matrix jac_y(const Vector& z, const Vector&) const override { return Matrix::Zero(z.size(), dy_); }
  Matrix hess_zz_contract(const Vector& z, const Vector& y, const Vector& w) const override {
    return w.cwiseProduct(beta_).cwiseProduct(beta_).cwiseProduct(forward(z, y)).asDiagonal();
  }
  Matrix hess_zy_contract(const Vector& z, const Vector&, const Vector&) const override {
    return Matrix::Zero(z.size(), dy_);
  }

 private:
  Vector alpha_;
  Vector beta_;
  Index dy_;
};

class DiagSpec final : public SeparableReparamSpec {
 public:
  explicit DiagSpec(BilevelProblem problem) : p_(std::move(problem)) {}

  std::string name() const override { return "diag-rep"; }
  bool offset() const override { return false; }

  Matrix r(const Vector& x, const Vector& y) const override { return diag(x, y).cwiseInverse().asDiagonal(); }
  Vector r_apply(const Vector& x, const Vector& y, const Vector& v) const override {
    return v.cwiseQuotient(diag(x, y));
  }
  Vector r_transpose_apply(const Vector& x, const Vector& y, const Vector& w) const override {
    return r_apply(x, y, w);
  }
  Vector r_solve(const Vector& x, const Vector& y, const Vector& v) const override {
    return v.cwiseProduct(diag(x, y));
  }
  // dR/dy_e = -diag(dF_1/dy_e) / diag(F_1)^2, symmetric so both contractions agree
  Matrix r2_contract_left(const Vector& x, const Vector& y, const Vector& w) const override {
    const Vector d2 = diag(x, y).array().square().matrix();
    Matrix out(p_.dx(), p_.dy());
    for (Index e = 0; e < p_.dy(); ++e) {
      const Vector de = p_.djac_x_dir_y(x, y, unit(p_.dy(), e)).diagonal();
      out.col(e) = -de.cwiseQuotient(d2).cwiseProduct(w);
    }
    return out;
  }
  Matrix r2_contract_right(const Vector& x, const Vector& y, const Vector& q) const override {
    return r2_contract_left(x, y, q);
  }

  Vector q(const Vector& z, const Vector&) const override { return z; }
  Matrix q_jac(const Vector& z, const Vector&) const override { return Matrix::Identity(z.size(), z.size()); }
  Matrix q_hess_contract(const Vector& z, const Vector&, const Vector&) const override {
    return Matrix::Zero(z.size(), z.size());
  }
  Vector q_inverse(const Vector& v, const Vector&) const override { return v; }

 private:
  Vector diag(const Vector& x, const Vector& y) const {
    Vector d = p_.jac_x(x, y).diagonal();
    for (Index i = 0; i < d.size(); ++i) {
      if (d(i) == 0.0) throw SingularMatrixError("diag(F_1)");
    }
    return d;
  }

  BilevelProblem p_;
};

class OptSpec final : public SeparableReparamSpec {
 public:
  OptSpec(BilevelProblem problem, double shift) : p_(std::move(problem)), shift_(shift) {
    if (!std::isfinite(shift_)) throw ContractViolation("opt reparam: shift must be finite");
  }

  std::string name() const override { return "opt"; }
  bool offset() const override { return true; }

  Matrix r(const Vector& x, const Vector& y) const override {
    const Index n = p_.dx();
    Matrix out = LU(p_.jac_x(x, y), "F_1").solve(Matrix::Identity(n, n));
    out.diagonal().array() += shift_;
    return out;
  }
  Vector r_apply(const Vector& x, const Vector& y, const Vector& v) const override {
    return LU(p_.jac_x(x, y), "F_1").solve(v) + shift_ * v;
  }
  Vector r_transpose_apply(const Vector& x, const Vector& y, const Vector& w) const override {
    return LU(p_.jac_x(x, y), "F_1").solve_transposed(w) + shift_ * w;
  }
  Vector r_solve(const Vector& x, const Vector& y, const Vector& v) const override {
    if (shift_ == 0.0) return p_.jac_x(x, y) * v;
    return linear_solve(r(x, y), v, "R");
  }
  // dR/dy_e = -F_1^{-1} (dF_1/dy_e) F_1^{-1}; the shift is constant in y
  Matrix r2_contract_left(const Vector& x, const Vector& y, const Vector& w) const override {
    const LU lu(p_.jac_x(x, y), "F_1");
    const Vector a = lu.solve_transposed(w);
    Matrix out(p_.dx(), p_.dy());
    for (Index e = 0; e < p_.dy(); ++e) {
      out.col(e) = -lu.solve_transposed(p_.djac_x_dir_y(x, y, unit(p_.dy(), e)).transpose() * a);
    }
    return out;
  }
  Matrix r2_contract_right(const Vector& x, const Vector& y, const Vector& q) const override {
    const LU lu(p_.jac_x(x, y), "F_1");
    const Vector b = lu.solve(q);
    Matrix out(p_.dx(), p_.dy());
    for (Index e = 0; e < p_.dy(); ++e) out.col(e) = -lu.solve(p_.djac_x_dir_y(x, y, unit(p_.dy(), e)) * b);
    return out;
  }

  Vector q(const Vector& z, const Vector& ybar) const override { return -p_.residual(z, ybar); }
  Matrix q_jac(const Vector& z, const Vector& ybar) const override { return -p_.jac_x(z, ybar); }
  Matrix q_hess_contract(const Vector& z, const Vector& ybar, const Vector& w) const override {
    return -residual_hessian_contract(p_, z, ybar, w);
  }
  Vector q_inverse(const Vector& v, const Vector& ybar) const override {
    if (p_.affine_in_x()) {
      const Vector zero = Vector::Zero(p_.dx());
      const LU lu(p_.jac_x(zero, ybar), "F_1");
      Vector z = lu.solve(-v - p_.residual(zero, ybar));
      z -= lu.solve(p_.residual(z, ybar) + v);
      return z;
    }
    if (v.isZero(0.0)) {
      if (auto root = p_.exact_root(ybar)) return *root;
    }
    throw CapabilityError("opt reparam: inverting -F(., y) needs an affine residual or an exact root at zero");
  }

 private:
  BilevelProblem p_;
  double shift_;
};

class AnchoredReparam final : public ReparamOracle {
 public:
  AnchoredReparam(SpecPtr spec, Vector xbar, Vector ybar)
      : spec_(std::move(spec)), xbar_(std::move(xbar)), ybar_(std::move(ybar)) {
    if (!spec_) throw ContractViolation("anchored reparam needs a spec");
  }

  Vector forward(const Vector& z, const Vector& y) const override {
    Vector x = spec_->r_apply(xbar_, y, spec_->q(z, ybar_));
    if (spec_->offset()) x += xbar_;
    return x;
  }
  Vector inverse(const Vector& x, const Vector& y) const override {
    const Vector shifted = spec_->offset() ? Vector(x - xbar_) : x;
    return spec_->q_inverse(spec_->r_solve(xbar_, y, shifted), ybar_);
  }
  Matrix jac_z(const Vector& z, const Vector& y) const override {
    return spec_->r(xbar_, y) * spec_->q_jac(z, ybar_);
  }
  Matrix jac_y(const Vector& z, const Vector& y) const override {
    return spec_->r2_contract_right(xbar_, y, spec_->q(z, ybar_));
  }
  Matrix hess_zz_contract(const Vector& z, const Vector& y, const Vector& w) const override {
    return spec_->q_hess_contract(z, ybar_, spec_->r_transpose_apply(xbar_, y, w));
  }
  Matrix hess_zy_contract(const Vector& z, const Vector& y, const Vector& w) const override {
    return spec_->q_jac(z, ybar_).transpose() * spec_->r2_contract_left(xbar_, y, w);
  }

 private:
  SpecPtr spec_;
  Vector xbar_;
  Vector ybar_;
};

}  // namespace

Vector SeparableReparamSpec::r_solve(const Vector& x, const Vector& y, const Vector& v) const {
  return linear_solve(r(x, y), v, "R");
}

ReparamPtr identity_reparam(Index dx, Index dy) { return std::make_shared<IdentityReparam>(dx, dy); }

ReparamPtr exp_family_reparam(const Vector& alpha, const Vector& beta, Index dy) {
  return std::make_shared<ExpReparam>(alpha, beta, dy);
}

ReparamPtr exp_reparam(const Vector& anchor, Index dy) {
  Vector alpha(anchor.size());
  for (Index k = 0; k < anchor.size(); ++k) {
    if (anchor(k) == 0.0) throw DomainError("exp reparam: anchor coordinate " + std::to_string(k) + " is zero");
    alpha(k) = anchor(k) > 0.0 ? 1.0 : -1.0;
  }
  return std::make_shared<ExpReparam>(alpha, Vector::Ones(anchor.size()), dy);
}

SpecPtr diag_reparam(const BilevelProblem& problem) { return std::make_shared<DiagSpec>(problem); }

SpecPtr opt_reparam(const BilevelProblem& problem, double shift) {
  return std::make_shared<OptSpec>(problem, shift);
}

ReparamPtr anchored_reparam(SpecPtr spec, const Vector& xbar, const Vector& ybar) {
  return std::make_shared<AnchoredReparam>(std::move(spec), xbar, ybar);
}

}  // namespace hypergrad
