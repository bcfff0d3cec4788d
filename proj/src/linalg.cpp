#include "hypergrad/linalg.hpp"

#include "hypergrad/errors.hpp"

#include <cmath>
#include <utility>

namespace hypergrad {

LU::LU(const Matrix& a, std::string name) : lu_(a), name_(std::move(name)) {
  if (a.rows() != a.cols()) throw ContractViolation("LU of non-square " + name_);
  if (!a.allFinite()) throw NumericalFailure("LU of non-finite " + name_);
  const Index n = a.rows();
  perm_.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm_[static_cast<std::size_t>(i)] = i;
  const double threshold = 1e-14 * (n > 0 ? a.cwiseAbs().maxCoeff() : 0.0);

  for (Index k = 0; k < n; ++k) {
    Index p = k;
    lu_.col(k).tail(n - k).cwiseAbs().maxCoeff(&p);
    p += k;
    if (!(std::abs(lu_(p, k)) > threshold)) throw SingularMatrixError(name_);
    if (p != k) {
      lu_.row(k).swap(lu_.row(p));
      std::swap(perm_[static_cast<std::size_t>(k)], perm_[static_cast<std::size_t>(p)]);
    }
    const double pivot = lu_(k, k);
    for (Index i = k + 1; i < n; ++i) {
      const double factor = lu_(i, k) / pivot;
      lu_(i, k) = factor;
      if (factor != 0.0) lu_.row(i).tail(n - k - 1) -= factor * lu_.row(k).tail(n - k - 1);
    }
  }
}

Matrix LU::solve(const Matrix& b) const {
  const Index n = size();
  if (b.rows() != n) throw ContractViolation("right-hand side rows do not match " + name_);
  Matrix x(n, b.cols());
  for (Index i = 0; i < n; ++i) x.row(i) = b.row(perm_[static_cast<std::size_t>(i)]);
  // L y = Pb, unit diagonal
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < i; ++j) x.row(i) -= lu_(i, j) * x.row(j);
  for (Index i = n - 1; i >= 0; --i) {
    for (Index j = i + 1; j < n; ++j) x.row(i) -= lu_(i, j) * x.row(j);
    x.row(i) /= lu_(i, i);
  }
  return x;
}

Matrix LU::solve_transposed(const Matrix& b) const {
  // A^T = U^T L^T P, so solve U^T w = b, L^T v = w, x = P^T v.
  const Index n = size();
  if (b.rows() != n) throw ContractViolation("right-hand side rows do not match " + name_);
  Matrix w = b;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < i; ++j) w.row(i) -= lu_(j, i) * w.row(j);
    w.row(i) /= lu_(i, i);
  }
  for (Index i = n - 1; i >= 0; --i)
    for (Index j = i + 1; j < n; ++j) w.row(i) -= lu_(j, i) * w.row(j);
  Matrix x(n, b.cols());
  for (Index i = 0; i < n; ++i) x.row(perm_[static_cast<std::size_t>(i)]) = w.row(i);
  return x;
}

Matrix linear_solve(const Matrix& a, const Matrix& b, const std::string& name) {
  return LU(a, name).solve(b);
}

Matrix linear_solve_transposed(const Matrix& a, const Matrix& b, const std::string& name) {
  return LU(a, name).solve_transposed(b);
}

SingularTriple top_singular(const Matrix& m, double tol, int max_iter) {
  if (!(tol > 0.0)) throw ContractViolation("top_singular: tol must be positive");
  if (max_iter < 1) throw ContractViolation("top_singular: max_iter must be positive");
  if (!m.allFinite()) throw NumericalFailure("top_singular: non-finite matrix");
  SingularTriple out;
  const Index n = m.cols();
  if (n == 0) return out;
  out.right = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  if (m.rows() == 0) return out;
  const double scale = m.cwiseAbs().maxCoeff();
  if (scale == 0.0) return out;

  // Work on M / scale so tiny (super-efficient) Jacobians do not underflow.
  const Matrix a = m / scale;
  Vector v = out.right;
  Vector av = a * v;
  if (av.norm() == 0.0) {
    // start vector in the null space: restart from the largest column
    Index j = 0;
    a.colwise().norm().maxCoeff(&j);
    v = Vector::Zero(n);
    v(j) = 1.0;
    av = a * v;
  }
  double sigma = av.norm();
  for (int it = 1; it <= max_iter; ++it) {
    Vector w = a.transpose() * av;
    const double wn = w.norm();
    if (wn == 0.0) break;
    v = w / wn;
    av = a * v;
    const double next = av.norm();
    const double change = std::abs(next - sigma);
    sigma = next;
    out.iterations = it;
    if (change <= tol * sigma) {
      out.value = sigma * scale;
      out.right = v;
      return out;
    }
  }
  if (out.iterations == 0) {
    out.value = sigma * scale;
    out.right = v;
    return out;
  }
  throw NumericalFailure("power iteration did not converge", static_cast<std::size_t>(max_iter),
                         sigma * scale);
}

double spectral_norm(const Matrix& m, double tol, int max_iter) { return top_singular(m, tol, max_iter).value; }

}  // namespace hypergrad
