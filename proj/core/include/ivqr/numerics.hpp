#pragma once

#include <Eigen/Dense>

namespace ivqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace numerics {

// Relative pivot threshold used by FactorSpd: a pivot is rejected when it is
// at or below kPivotTolerance times the largest diagonal entry.
inline constexpr double kPivotTolerance = 1e-12;

// Lower-triangular Cholesky factor L with A = L * L^T.
class SpdFactor {
 public:
  SpdFactor() = default;
  explicit SpdFactor(Matrix lower) : lower_(std::move(lower)) {}

  const Matrix& lower() const { return lower_; }
  Eigen::Index dim() const { return lower_.rows(); }
  Matrix Reconstruct() const { return lower_ * lower_.transpose(); }

 private:
  Matrix lower_;
};

// Throws kNotPositiveDefinite (pivot rule above) or kDimensionMismatch
// (non-square or asymmetric beyond 1e-12 relative).
SpdFactor FactorSpd(const Matrix& a);

Vector SolveSpd(const SpdFactor& f, const Vector& b);
Matrix SolveSpd(const SpdFactor& f, const Matrix& b);

Matrix InvertSpd(const Matrix& a);

// Minimizes ||a x - b||_2 via the normal equations; throws kRankDeficient
// when a^T a fails FactorSpd.
Vector LeastSquares(const Matrix& a, const Vector& b);

// x^T a x.
double QuadraticForm(const Matrix& a, const Vector& x);

bool AllFinite(const Matrix& a);

Matrix Symmetrize(const Matrix& a);

}  // namespace numerics
}  // namespace ivqr
