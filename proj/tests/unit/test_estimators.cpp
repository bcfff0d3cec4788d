#include "hypergrad/dataset.hpp"
#include "hypergrad/errors.hpp"
#include "hypergrad/estimators.hpp"
#include "hypergrad/linalg.hpp"
#include "hypergrad/models.hpp"
#include "hypergrad/reparam.hpp"
#include "hypergrad/solvers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>

using namespace hypergrad;

namespace {
const std::string kData = HYPERGRAD_DATA_DIR;

Vector v1(double a) { return Vector::Constant(1, a); }

BilevelProblem ridge(std::uint64_t seed = 1, OuterKind outer = OuterKind::quadratic) {
  const Dataset d = load_libsvm(kData + "/mpg_scale");
  return make_ridge(d, random_validation(d.n(), d.dims(), seed), outer);
}

BilevelProblem logistic() {
  return make_logistic(load_libsvm(kData + "/liver-disorders_scale.train"),
                       load_libsvm(kData + "/liver-disorders_scale.val", 5), OuterKind::quadratic);
}

// F = x - y, g = x: Psi = 1.
class ShiftInner final : public InnerOracle {
 public:
  Vector residual(const Vector& x, const Vector& y) const override { return x - y; }
  Matrix jac_x(const Vector&, const Vector&) const override { return Matrix::Identity(1, 1); }
  Matrix jac_y(const Vector&, const Vector&) const override { return -Matrix::Identity(1, 1); }
  Matrix djac_x_dir_x(const Vector&, const Vector&, const Vector&) const override { return Matrix::Zero(1, 1); }
  Matrix djac_x_dir_y(const Vector&, const Vector&, const Vector&) const override { return Matrix::Zero(1, 1); }
};
}  // namespace

TEST(Psi, Linear1d) {
  const BilevelProblem p = make_linear1d();
  for (double x : {-2.0, 0.3, 1.7}) EXPECT_NEAR(psi(p, v1(x), v1(0.4))(0, 0), -x, 1e-15);
}

TEST(Psi, Shift) {
  const BilevelProblem lin = make_linear1d();
  const BilevelProblem p(std::make_shared<ShiftInner>(),
                         std::shared_ptr<const OuterOracle>(&lin.outer(), [](const OuterOracle*) {}), 1, 1);
  EXPECT_DOUBLE_EQ(psi(p, v1(0.2), v1(0.1))(0, 0), 1.0);
}

TEST(Psi, RidgeMatchesFdJacobianAtRoot) {
  const BilevelProblem p = ridge();
  const Vector y = sample_y(7, -1, 1, 3);
  const Matrix fd = fd_jac_xstar(p, y);
  EXPECT_LE((psi(p, p.root(y), y).transpose() - fd).norm(), 1e-6 * fd.norm());
}

TEST(Psi, SingularJacobian) {
  // F = x^2 - y has F_1 = 0 at x = 0
  auto inner = std::make_shared<FiniteDifferenceInner>(
      [](const Vector& x, const Vector& y) -> Vector { return x.cwiseProduct(x) - y; }, 1, 1);
  const BilevelProblem lin = make_linear1d();
  const BilevelProblem p(inner, std::shared_ptr<const OuterOracle>(&lin.outer(), [](const OuterOracle*) {}), 1, 1);
  EXPECT_THROW(vanilla_ift(p, v1(0.0), v1(1.0)), SingularMatrixError);
}

TEST(VanillaIft, ClosedForms) {
  EXPECT_NEAR(vanilla_ift(make_scalar_ridge(), v1(0.5), v1(0.0))(0), -0.125, 1e-15);
  EXPECT_NEAR(vanilla_ift(make_linear1d(), v1(0.9), v1(0.0))(0), -0.9, 1e-15);
}

TEST(Preconditioned, NewtonOnAffineIsExact) {
  const BilevelProblem lin = make_linear1d();
  EXPECT_NEAR(precond_estimate(lin, *newton_preconditioner(lin), v1(0.3), v1(0.0))(0), -1.0, 1e-15);
  const BilevelProblem sr = make_scalar_ridge();
  EXPECT_NEAR(precond_estimate(sr, *newton_preconditioner(sr), v1(0.0), v1(0.0))(0), -0.125, 1e-15);
}

TEST(Preconditioned, NewtonOnRidgeFromAnyPoint) {
  const BilevelProblem p = ridge();
  const Vector y = sample_y(7, -1, 1, 4);
  const Vector truth = vanilla_ift(p, p.root(y), y);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const Vector x = sample_y(7, -10, 10, s);
    EXPECT_LE((precond_estimate(p, *newton_preconditioner(p), x, y) - truth).norm(), 1e-9 * truth.norm());
  }
}

TEST(Preconditioned, ConsistentAtRoot) {
  const BilevelProblem p = ridge();
  const Vector y = sample_y(7, -1, 1, 5);
  const Vector xs = p.root(y);
  const Vector ref = vanilla_ift(p, xs, y);
  for (double scale : {0.5, 1.0, 3.0}) {
    EXPECT_LE((precond_estimate(p, *diag_preconditioner(p, scale), xs, y) - ref).norm(), 1e-10 * ref.norm());
  }
}

TEST(Preconditioned, DiagEqualsNewtonInOneDimension) {
  const BilevelProblem p = make_scalar_ridge();
  for (double x : {-1.0, 0.1, 2.0}) {
    EXPECT_DOUBLE_EQ(precond_estimate(p, *diag_preconditioner(p), v1(x), v1(0.3))(0),
                     precond_estimate(p, *newton_preconditioner(p), v1(x), v1(0.3))(0));
  }
}

TEST(Preconditioned, SolveInvertsMatrix) {
  const BilevelProblem p = ridge();
  const Vector y = sample_y(7, -1, 1, 6), x = sample_y(7, -1, 1, 7), v = sample_y(7, -1, 1, 8);
  for (const PrecondPtr& pc : {newton_preconditioner(p), diag_preconditioner(p, 2.0)}) {
    EXPECT_LE((pc->matrix(x, y) * pc->solve(x, y, v) - v).norm(), 1e-10 * v.norm());
  }
  EXPECT_EQ(newton_preconditioner(p)->name(), "newton");
}

TEST(Preconditioned, SingularPIsNamed) {
  // F_1 = [[0, 1], [1, 0]] has a zero diagonal
  auto inner = std::make_shared<FiniteDifferenceInner>(
      [](const Vector& x, const Vector& y) -> Vector { return Vector{{x(1) - y(0), x(0) - y(1)}}; }, 2, 2);
  const BilevelProblem lin = make_linear1d();
  const BilevelProblem p(inner, std::shared_ptr<const OuterOracle>(&lin.outer(), [](const OuterOracle*) {}), 2, 2);
  try {
    precond_estimate(p, *diag_preconditioner(p), Vector::Ones(2), Vector::Zero(2));
    FAIL() << "expected SingularMatrixError";
  } catch (const SingularMatrixError& e) {
    EXPECT_EQ(e.matrix_name(), "P");
  }
  EXPECT_THROW(newton_preconditioner(p, 0.0), ContractViolation);
}

TEST(Reparam, IdentityMatchesVanilla) {
  const BilevelProblem p = logistic();
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const Vector x = sample_y(5, -1, 1, s), y = sample_y(5, -1, 1, s + 10);
    const Vector a = reparam_estimate(p, *identity_reparam(5, 5), x, y);
    const Vector b = vanilla_ift(p, x, y);
    EXPECT_LE((a - b).norm(), 1e-12 * (1 + b.norm()));
  }
}

TEST(Reparam, ExpOnLinear1dHandValue) {
  const BilevelProblem p = make_linear1d();
  const ReparamPtr phi = exp_family_reparam(Vector::Ones(1), Vector::Ones(1), 1);
  // V = (1/0.9)(-0.1) + 1, Psi = -0.9 / V
  const double expected = -0.9 / (1.0 - 0.1 / 0.9);
  EXPECT_NEAR(reparam_estimate(p, *phi, v1(0.9), v1(0.0))(0), expected, 1e-14);
  EXPECT_NEAR(expected, -1.0125, 1e-12);
}

TEST(Reparam, ConsistentAtRoot) {
  const BilevelProblem p = logistic();
  const Vector y = sample_y(5, -1, 1, 2);
  const Vector xs = p.root(y);
  const Vector ref = vanilla_ift(p, xs, y);
  for (Strategy s : {Strategy::exp, Strategy::diag_rep, Strategy::opt}) {
    EXPECT_LE((make_estimator(p, s)(xs, y) - ref).norm(), 1e-9 * (1 + ref.norm())) << to_string(s);
  }
}

TEST(Reparam, ExpRoundTripMixedSigns) {
  Vector anchor(4);
  anchor << -2.0, 0.5, -1e-3, 7.0;
  const ReparamPtr phi = exp_reparam(anchor, 2);
  const Vector y = Vector::Zero(2);
  EXPECT_LE((phi->forward(phi->inverse(anchor, y), y) - anchor).norm(), 1e-14 * anchor.norm());
  Vector flipped = anchor;
  flipped(0) = 1.0;
  EXPECT_THROW(phi->inverse(flipped, y), DomainError);
}

TEST(Reparam, ExpZeroAnchorIsDomainError) {
  EXPECT_THROW(exp_reparam(Vector::Zero(2), 1), DomainError);
  EXPECT_THROW(exp_family_reparam(Vector::Zero(1), Vector::Ones(1), 1), DomainError);
}

TEST(Reparam, OracleDerivativesMatchFiniteDifferences) {
  const BilevelProblem p = ridge();
  const Vector x = sample_y(7, 0.1, 1, 1), y = sample_y(7, -1, 1, 2), w = sample_y(7, -1, 1, 3);
  const ReparamPtr maps[] = {anchored_reparam(opt_reparam(p), x, y), anchored_reparam(diag_reparam(p), x, y),
                             exp_reparam(x, 7)};
  const double h = 1e-6;
  for (const ReparamPtr& phi : maps) {
    const Vector z = phi->inverse(x + 0.1 * w, y);
    EXPECT_LE((phi->forward(z, y) - (x + 0.1 * w)).norm(), 1e-10 * x.norm());
    Matrix jz(7, 7), jy(7, 7), hzz(7, 7), hzy(7, 7);
    for (Index j = 0; j < 7; ++j) {
      Vector e = Vector::Zero(7);
      e(j) = h;
      jz.col(j) = (phi->forward(z + e, y) - phi->forward(z - e, y)) / (2 * h);
      jy.col(j) = (phi->forward(z, y + e) - phi->forward(z, y - e)) / (2 * h);
      hzz.col(j) = (phi->jac_z(z + e, y).transpose() * w - phi->jac_z(z - e, y).transpose() * w) / (2 * h);
      hzy.col(j) = (phi->jac_z(z, y + e).transpose() * w - phi->jac_z(z, y - e).transpose() * w) / (2 * h);
    }
    const double s = 1 + phi->jac_z(z, y).norm();
    EXPECT_LE((phi->jac_z(z, y) - jz).norm(), 1e-6 * s);
    EXPECT_LE((phi->jac_y(z, y) - jy).norm(), 1e-6 * s);
    EXPECT_LE((phi->hess_zz_contract(z, y, w) - hzz).norm(), 1e-5 * s);
    EXPECT_LE((phi->hess_zy_contract(z, y, w) - hzy).norm(), 1e-5 * s);
  }
}

TEST(Localized, DiagOnLinear1dIsNewtonExact) {
  const BilevelProblem p = make_linear1d();
  EXPECT_NEAR(localized_estimate(p, diag_reparam(p), v1(0.9), v1(0.0))(0), -1.0, 1e-14);
}

TEST(Localized, OptOnRidgeExactFromAnyPoint) {
  const BilevelProblem p = ridge(2, OuterKind::affine);
  const Vector y = sample_y(7, -1, 1, 3);
  const Vector truth = vanilla_ift(p, p.root(y), y);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const Vector x = sample_y(7, -5, 5, s);
    EXPECT_LE((localized_estimate(p, opt_reparam(p), x, y) - truth).norm(), 1e-9 * truth.norm());
  }
}

TEST(Localized, OptNeedsRootAwayFromAnchorOnNonlinearF) {
  const BilevelProblem p = logistic();
  const SpecPtr spec = opt_reparam(p);
  const Vector y = sample_y(5, -1, 1, 1);
  const Vector x = sample_y(5, -1, 1, 2);
  EXPECT_THROW(spec->q_inverse(Vector::Ones(5), y), CapabilityError);
  EXPECT_NO_THROW(localized_estimate(p, spec, x, y));  // anchored inverse is the exact root
}

TEST(Strategy, Names) {
  EXPECT_EQ(all_strategies().size(), 6u);
  for (Strategy s : all_strategies()) EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_EQ(to_string(Strategy::diag_rep), "diag-rep");
  EXPECT_THROW(parse_strategy("bogus"), UsageError);
  EXPECT_EQ(parse_strategy_list("vanilla,opt").size(), 2u);
  EXPECT_THROW(parse_strategy_list(""), UsageError);
  EXPECT_THROW(parse_strategy_list("vanilla,,opt"), UsageError);
}

TEST(Strategy, FactoriesOnlyForReparam) {
  const BilevelProblem p = make_linear1d();
  EXPECT_FALSE(reparam_factory(p, Strategy::newton).has_value());
  EXPECT_TRUE(reparam_factory(p, Strategy::exp).has_value());
}
