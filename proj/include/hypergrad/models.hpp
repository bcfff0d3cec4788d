#pragma once

#include "hypergrad/dataset.hpp"
#include "hypergrad/problem.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace hypergrad {

enum class OuterKind { quadratic, affine };

OuterKind parse_outer_kind(const std::string& text);
std::string to_string(OuterKind kind);

/// Numerically stable logistic helpers.
double sigmoid(double t);
double sigmoid_prime(double t);
double sigmoid_second(double t);
double softplus(double t);

/// Inner residual 2 A^T (A x - b) + exp(y) * x, one penalty weight per feature.
/// The quadratic outer is |A_val x - b_val|^2; the affine outer is a^T x with
/// `affine_a` defaulting to the all-ones vector.
BilevelProblem make_ridge(const Dataset& train, const Dataset& val, OuterKind outer,
                          std::optional<Vector> affine_a = std::nullopt);

/// Inner residual of sum softplus(-b * A x) + 1/2 sum exp(y_i) x_i^2. The
/// quadratic outer here is the logistic loss on the validation set.
BilevelProblem make_logistic(const Dataset& train, const Dataset& val, OuterKind outer,
                             std::optional<Vector> affine_a = std::nullopt);

/// F = (x - 1) + e^y x, g = x^2 / 2; root 1 / (1 + e^y).
BilevelProblem make_scalar_ridge();
/// F = e^y x - 1, g = x; root e^{-y}.
BilevelProblem make_linear1d();

/// A_val, b_val with i.i.d. standard normal entries (A row-major, then b).
Dataset random_validation(Index n, Index d, std::uint64_t seed);

/// d uniform draws in [low, high).
Vector sample_y(Index d, double low, double high, std::uint64_t seed);

}  // namespace hypergrad
