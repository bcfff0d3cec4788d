#include "hypergrad/estimators.hpp"

#include "hypergrad/errors.hpp"
#include "hypergrad/linalg.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace hypergrad {

Matrix psi(const BilevelProblem& problem, const Vector& x, const Vector& y) {
  return -linear_solve(problem.jac_x(x, y), problem.jac_y(x, y), "F_1").transpose();
}

Vector vanilla_ift(const BilevelProblem& problem, const Vector& x, const Vector& y) {
  // g_2 + Psi g_1 = g_2 - F_2^T F_1^{-T} g_1
  const Vector a = linear_solve_transposed(problem.jac_x(x, y), problem.outer_grad_x(x, y), "F_1");
  return problem.outer_grad_y(x, y) - problem.jac_y(x, y).transpose() * a;
}

Vector PreconditionerOracle::solve(const Vector& x, const Vector& y, const Vector& v) const {
  return linear_solve(matrix(x, y), v, "P");
}

namespace {

class NewtonPreconditioner final : public PreconditionerOracle {
 public:
  NewtonPreconditioner(BilevelProblem p, double scale) : p_(std::move(p)), scale_(scale) {}
  std::string name() const override { return "newton"; }
  Matrix matrix(const Vector& x, const Vector& y) const override { return scale_ * p_.jac_x(x, y); }

 private:
  BilevelProblem p_;
  double scale_;
};

class DiagPreconditioner final : public PreconditionerOracle {
 public:
  DiagPreconditioner(BilevelProblem p, double scale) : p_(std::move(p)), scale_(scale) {}
  std::string name() const override { return "diag"; }
  Matrix matrix(const Vector& x, const Vector& y) const override {
    return (scale_ * p_.jac_x(x, y).diagonal()).asDiagonal();
  }
  Vector solve(const Vector& x, const Vector& y, const Vector& v) const override {
    const Vector d = scale_ * p_.jac_x(x, y).diagonal();
    const double threshold = 1e-14 * d.cwiseAbs().maxCoeff();
    for (Index i = 0; i < d.size(); ++i) {
      if (!(std::abs(d(i)) > threshold)) throw SingularMatrixError("P");
    }
    return v.cwiseQuotient(d);
  }

 private:
  BilevelProblem p_;
  double scale_;
};

void check_scale(double scale) {
  if (!(scale != 0.0) || !std::isfinite(scale)) throw ContractViolation("preconditioner scale must be finite and nonzero");
}

}  // namespace

PrecondPtr newton_preconditioner(const BilevelProblem& problem, double scale) {
  check_scale(scale);
  return std::make_shared<NewtonPreconditioner>(problem, scale);
}

PrecondPtr diag_preconditioner(const BilevelProblem& problem, double scale) {
  check_scale(scale);
  return std::make_shared<DiagPreconditioner>(problem, scale);
}

Vector precond_estimate(const BilevelProblem& problem, const PreconditionerOracle& p, const Vector& x,
                        const Vector& y) {
  Vector step;
  try {
    step = p.solve(x, y, problem.residual(x, y));
  } catch (const SingularMatrixError&) {
    throw SingularMatrixError("P");
  }
  const Vector corrected = x - step;
  try {
    return vanilla_ift(problem, corrected, y);
  } catch (const SingularMatrixError&) {
    throw SingularMatrixError("F_1");
  }
}

Matrix reparam_psi(const BilevelProblem& problem, const ReparamOracle& phi, const Vector& x, const Vector& y) {
  const Vector z = phi.inverse(x, y);
  if (!z.allFinite()) throw DomainError("change of variable inverse is not finite");
  const Vector f = problem.residual(x, y);
  const Matrix f1 = problem.jac_x(x, y);
  const Matrix f2 = problem.jac_y(x, y);
  const Matrix phi1 = phi.jac_z(z, y);
  const Matrix phi2 = phi.jac_y(z, y);
  const Matrix h11 = phi.hess_zz_contract(z, y, f);
  const Matrix h21 = phi.hess_zy_contract(z, y, f);

  const LU phi1_lu(phi1, "phi_1");
  const Matrix u = f2 + f1 * phi2 + phi1_lu.solve_transposed(h21);
  const Matrix t = phi1_lu.solve_transposed(h11);  // phi_1^{-T} H11
  const Matrix v = phi1_lu.solve_transposed(t.transpose()).transpose() + f1;
  return phi2.transpose() - linear_solve(v, u, "V").transpose();
}

Vector reparam_estimate(const BilevelProblem& problem, const ReparamOracle& phi, const Vector& x, const Vector& y) {
  return problem.outer_grad_y(x, y) + reparam_psi(problem, phi, x, y) * problem.outer_grad_x(x, y);
}

Vector localized_estimate(const BilevelProblem& problem, const SpecPtr& spec, const Vector& x, const Vector& y) {
  return reparam_estimate(problem, *anchored_reparam(spec, x, y), x, y);
}

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> all = {Strategy::vanilla, Strategy::newton,   Strategy::diag,
                                            Strategy::exp,     Strategy::diag_rep, Strategy::opt};
  return all;
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::vanilla: return "vanilla";
    case Strategy::newton: return "newton";
    case Strategy::diag: return "diag";
    case Strategy::exp: return "exp";
    case Strategy::diag_rep: return "diag-rep";
    case Strategy::opt: return "opt";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& name) {
  for (Strategy s : all_strategies()) {
    if (to_string(s) == name) return s;
  }
  throw UsageError("unknown strategy '" + name + "'");
}

std::vector<Strategy> parse_strategy_list(const std::string& csv) {
  std::vector<Strategy> out;
  std::stringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_strategy(item));
  if (out.empty()) throw UsageError("strategy list is empty");
  return out;
}

ReparamFactory spec_factory(SpecPtr spec) {
  return [spec](const Vector& x, const Vector& y) { return anchored_reparam(spec, x, y); };
}

ReparamFactory fixed_factory(ReparamPtr phi) {
  return [phi](const Vector&, const Vector&) { return phi; };
}

std::optional<ReparamFactory> reparam_factory(const BilevelProblem& problem, Strategy s) {
  const Index dy = problem.dy();
  switch (s) {
    case Strategy::exp:
      return ReparamFactory([dy](const Vector& x, const Vector&) { return exp_reparam(x, dy); });
    case Strategy::diag_rep: return spec_factory(diag_reparam(problem));
    case Strategy::opt: return spec_factory(opt_reparam(problem));
    default: return std::nullopt;
  }
}

Estimator reparam_estimator(const BilevelProblem& problem, ReparamFactory factory) {
  return [problem, factory = std::move(factory)](const Vector& x, const Vector& y) {
    return reparam_estimate(problem, *factory(x, y), x, y);
  };
}

Estimator precond_estimator(const BilevelProblem& problem, PrecondPtr p) {
  return [problem, p = std::move(p)](const Vector& x, const Vector& y) { return precond_estimate(problem, *p, x, y); };
}

Estimator make_estimator(const BilevelProblem& problem, Strategy s) {
  switch (s) {
    case Strategy::vanilla:
      return [problem](const Vector& x, const Vector& y) { return vanilla_ift(problem, x, y); };
    case Strategy::newton: return precond_estimator(problem, newton_preconditioner(problem));
    case Strategy::diag: return precond_estimator(problem, diag_preconditioner(problem));
    default: return reparam_estimator(problem, *reparam_factory(problem, s));
  }
}

PsiMap vanilla_psi_map(const BilevelProblem& problem) {
  return [problem](const Vector& x, const Vector& y) { return psi(problem, x, y); };
}

PsiMap reparam_psi_map(const BilevelProblem& problem, ReparamFactory factory) {
  return [problem, factory = std::move(factory)](const Vector& x, const Vector& y) {
    return reparam_psi(problem, *factory(x, y), x, y);
  };
}

}  // namespace hypergrad
