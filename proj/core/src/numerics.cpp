#include "ivqr/numerics.hpp"

#include <cmath>
#include <sstream>

#include "ivqr/error.hpp"

namespace ivqr {

const char* ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kSingularInstruments: return "SingularInstruments";
    case ErrorCode::kDegenerateVariance: return "DegenerateVariance";
    case ErrorCode::kDegenerateDesign: return "DegenerateDesign";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kNonNumericCell: return "NonNumericCell";
    case ErrorCode::kEmptyFile: return "EmptyFile";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kInconsistentDimensions: return "InconsistentDimensions";
    case ErrorCode::kNoFeasibleSolution: return "NoFeasibleSolution";
    case ErrorCode::kTooLarge: return "TooLarge";
  }
  return "Unknown";
}

namespace numerics {

SpdFactor FactorSpd(const Matrix& a) {
  if (a.rows() != a.cols()) {
    std::ostringstream msg;
    msg << "expected square matrix, got " << a.rows() << "x" << a.cols();
    throw Error(ErrorCode::kDimensionMismatch, msg.str());
  }
  const Eigen::Index n = a.rows();
  const double scale = n > 0 ? a.cwiseAbs().maxCoeff() : 0.0;
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, scale)) {
    throw Error(ErrorCode::kDimensionMismatch, "matrix is not symmetric");
  }
  const double max_diag = n > 0 ? a.diagonal().maxCoeff() : 0.0;
  if (n > 0 && !(max_diag > 0.0)) {
    throw Error(ErrorCode::kNotPositiveDefinite, "non-positive diagonal");
  }
  const double threshold = kPivotTolerance * max_diag;

  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > threshold)) {
      std::ostringstream msg;
      msg << "pivot " << pivot << " at column " << j;
      throw Error(ErrorCode::kNotPositiveDefinite, msg.str());
    }
    const double d = std::sqrt(pivot);
    l(j, j) = d;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / d;
    }
  }
  return SpdFactor(std::move(l));
}

Matrix SolveSpd(const SpdFactor& f, const Matrix& b) {
  if (b.rows() != f.dim()) {
    std::ostringstream msg;
    msg << "factor has dimension " << f.dim() << ", rhs has " << b.rows()
        << " rows";
    throw Error(ErrorCode::kDimensionMismatch, msg.str());
  }
  const auto lower = f.lower().triangularView<Eigen::Lower>();
  Matrix y = lower.solve(b);
  return f.lower().transpose().triangularView<Eigen::Upper>().solve(y);
}

Vector SolveSpd(const SpdFactor& f, const Vector& b) {
  return SolveSpd(f, Matrix(b)).col(0);
}

Matrix InvertSpd(const Matrix& a) {
  const SpdFactor f = FactorSpd(a);
  return Symmetrize(SolveSpd(f, Matrix(Matrix::Identity(a.rows(), a.cols()))));
}

Vector LeastSquares(const Matrix& a, const Vector& b) {
  if (a.rows() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "rows of A differ from length of b");
  }
  const Matrix ata = Symmetrize(a.transpose() * a);
  SpdFactor f;
  try {
    f = FactorSpd(ata);
  } catch (const Error& e) {
    throw Error(ErrorCode::kRankDeficient, e.what());
  }
  Vector x = SolveSpd(f, Vector(a.transpose() * b));
  // One step of iterative refinement on the normal equations.
  const Vector r = a.transpose() * (b - a * x);
  x += SolveSpd(f, r);
  return x;
}

double QuadraticForm(const Matrix& a, const Vector& x) { return x.dot(a * x); }

bool AllFinite(const Matrix& a) { return a.allFinite(); }

Matrix Symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace numerics
}  // namespace ivqr
