#pragma once

#include "hypergrad/problem.hpp"
#include "hypergrad/reparam.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hypergrad {

/// Psi = -(F_1^{-1} F_2)^T, shape d_y x d_x.
Matrix psi(const BilevelProblem& problem, const Vector& x, const Vector& y);

/// Omega(x, y) = g_2 + Psi g_1.
Vector vanilla_ift(const BilevelProblem& problem, const Vector& x, const Vector& y);

class PreconditionerOracle {
 public:
  virtual ~PreconditionerOracle() = default;

  virtual std::string name() const = 0;
  virtual Matrix matrix(const Vector& x, const Vector& y) const = 0;
  /// P^{-1} v.
  virtual Vector solve(const Vector& x, const Vector& y, const Vector& v) const;
};

using PrecondPtr = std::shared_ptr<const PreconditionerOracle>;

/// P = scale * F_1.
PrecondPtr newton_preconditioner(const BilevelProblem& problem, double scale = 1.0);
/// P = scale * diag(F_1).
PrecondPtr diag_preconditioner(const BilevelProblem& problem, double scale = 1.0);

/// Omega(x - P^{-1} F(x, y), y). A singular P is reported as matrix "P",
/// a singular Jacobian at the corrected point as "F_1".
Vector precond_estimate(const BilevelProblem& problem, const PreconditionerOracle& p, const Vector& x,
                        const Vector& y);

/// Psi^phi = phi_2^T - (V^{-1} U)^T with
///   U = F_2 + F_1 phi_2 + phi_1^{-T} (phi_21 F)
///   V = phi_1^{-T} (phi_11 F) phi_1^{-1} + F_1
/// evaluated at z = phi^{-1}(x, y).
Matrix reparam_psi(const BilevelProblem& problem, const ReparamOracle& phi, const Vector& x, const Vector& y);

/// g_2 + Psi^phi g_1.
Vector reparam_estimate(const BilevelProblem& problem, const ReparamOracle& phi, const Vector& x, const Vector& y);

/// reparam_estimate with the spec anchored at the query point.
Vector localized_estimate(const BilevelProblem& problem, const SpecPtr& spec, const Vector& x, const Vector& y);

enum class Strategy { vanilla, newton, diag, exp, diag_rep, opt };

const std::vector<Strategy>& all_strategies();
std::string to_string(Strategy s);
/// UsageError on unknown names.
Strategy parse_strategy(const std::string& name);
std::vector<Strategy> parse_strategy_list(const std::string& csv);

using Estimator = std::function<Vector(const Vector& x, const Vector& y)>;
/// Builds the change of variable a reparameterized estimator uses at (x, y).
using ReparamFactory = std::function<ReparamPtr(const Vector& x, const Vector& y)>;
/// Psi-like map (x, y) -> d_y x d_x matrix.
using PsiMap = std::function<Matrix(const Vector& x, const Vector& y)>;

Estimator make_estimator(const BilevelProblem& problem, Strategy s);
Estimator reparam_estimator(const BilevelProblem& problem, ReparamFactory factory);
Estimator precond_estimator(const BilevelProblem& problem, PrecondPtr p);

/// Factory for the reparameterized strategies; nullopt for the others.
std::optional<ReparamFactory> reparam_factory(const BilevelProblem& problem, Strategy s);
ReparamFactory spec_factory(SpecPtr spec);
ReparamFactory fixed_factory(ReparamPtr phi);

PsiMap vanilla_psi_map(const BilevelProblem& problem);
PsiMap reparam_psi_map(const BilevelProblem& problem, ReparamFactory factory);

}  // namespace hypergrad
