#pragma once

#include "hypergrad/problem.hpp"

#include <string>
#include <vector>

namespace hypergrad {

/// Dense LU factorization with partial pivoting, PA = LU.
///
/// A pivot whose magnitude falls below 1e-14 * max|A_ij| is treated as zero
/// and raises SingularMatrixError carrying `name`.
class LU {
 public:
  explicit LU(const Matrix& a, std::string name = "A");

  Index size() const { return lu_.rows(); }
  /// Solves A X = B.
  Matrix solve(const Matrix& b) const;
  /// Solves A^T X = B using the same factors.
  Matrix solve_transposed(const Matrix& b) const;

 private:
  Matrix lu_;
  std::vector<Index> perm_;
  std::string name_;
};

Matrix linear_solve(const Matrix& a, const Matrix& b, const std::string& name = "A");
Matrix linear_solve_transposed(const Matrix& a, const Matrix& b, const std::string& name = "A");

struct SingularTriple {
  double value = 0.0;
  Vector right;  // unit right singular vector
  int iterations = 0;
};

/// Largest singular value by power iteration on M^T M from the normalized
/// all-ones vector. Returns value 0 for the zero matrix.
SingularTriple top_singular(const Matrix& m, double tol = 1e-12, int max_iter = 10000);
double spectral_norm(const Matrix& m, double tol = 1e-12, int max_iter = 10000);

}  // namespace hypergrad
