#pragma once

#include <optional>

#include "ivqr/numerics.hpp"

namespace ivqr {

// minimize 0.5 v'Hv + c'v + constant  s.t.  A v <= b,  lower <= v <= upper.
// H must be symmetric positive semidefinite; it may be singular (H = 0 gives
// an LP). Bounds may be infinite.
struct QpProblem {
  Matrix H;
  Vector c;
  double constant = 0.0;
  Matrix A;
  Vector b;
  Vector lower;
  Vector upper;

  Eigen::Index num_vars() const { return c.size(); }
  Eigen::Index num_rows() const { return A.rows(); }
};

// Convenience constructor: no rows, unbounded variables.
QpProblem MakeQp(Matrix H, Vector c);

enum class QpStatus { kOptimal, kInfeasible, kIterLimit, kUnbounded };

const char* ToString(QpStatus s);

struct QpSolution {
  Vector v;
  double objective = 0.0;
  QpStatus status = QpStatus::kIterLimit;
  double kkt_residual = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
};

struct QpOptions {
  double tol = 1e-8;
  int max_iter = 5000;
  // Starting point. If it is feasible within tol, phase 1 is skipped.
  std::optional<Vector> warm_start;
};

// Primal active-set method for convex QPs with a PSD (possibly singular)
// Hessian. Infeasibility is decided by FeasibilityPhase1.
QpSolution SolveQp(const QpProblem& p, const QpOptions& opts = {});

struct Phase1Result {
  bool feasible = false;
  Vector v;               // feasible point, or phase-1 minimizer
  double objective = 0.0; // sum of squared slacks at the phase-1 optimum
  double max_violation = 0.0;
  QpStatus status = QpStatus::kOptimal;
};

// Finds v with A v <= b and lower <= v <= upper (max violation <= tol), or
// certifies infeasibility by minimizing the sum of squared slacks.
Phase1Result FeasibilityPhase1(const Matrix& A, const Vector& b, const Vector& lower,
                               const Vector& upper, const QpOptions& opts = {});

// Largest violation of A v <= b and the bounds.
double MaxViolation(const Matrix& A, const Vector& b, const Vector& lower,
                    const Vector& upper, const Vector& v);

}  // namespace ivqr
