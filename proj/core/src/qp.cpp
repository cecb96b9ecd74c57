#include "ivqr/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ivqr/error.hpp"

namespace ivqr {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// All constraints as rows C v <= d (general rows first, then finite bounds).
struct Rows {
  Matrix C;
  Vector d;
};

Rows StackRows(const QpProblem& p) {
  const Eigen::Index n = p.num_vars();
  std::vector<std::pair<Eigen::Index, double>> bounds;  // (signed index, rhs)
  for (Eigen::Index j = 0; j < n; ++j) {
    if (p.upper.size() == n && std::isfinite(p.upper(j))) bounds.emplace_back(j + 1, p.upper(j));
    if (p.lower.size() == n && std::isfinite(p.lower(j))) bounds.emplace_back(-(j + 1), -p.lower(j));
  }
  const Eigen::Index m = p.num_rows() + static_cast<Eigen::Index>(bounds.size());
  Rows r{Matrix::Zero(m, n), Vector(m)};
  if (p.num_rows() > 0) {
    r.C.topRows(p.num_rows()) = p.A;
    r.d.head(p.num_rows()) = p.b;
  }
  for (std::size_t k = 0; k < bounds.size(); ++k) {
    const Eigen::Index row = p.num_rows() + static_cast<Eigen::Index>(k);
    const Eigen::Index j = std::abs(bounds[k].first) - 1;
    r.C(row, j) = bounds[k].first > 0 ? 1.0 : -1.0;
    r.d(row) = bounds[k].second;
  }
  return r;
}

double RowsViolation(const Rows& r, const Vector& x) {
  if (r.C.rows() == 0) return 0.0;
  return std::max(0.0, (r.C * x - r.d).maxCoeff());
}

struct CoreResult {
  Vector x;
  std::vector<Eigen::Index> working;
  Vector lambda;
  QpStatus status = QpStatus::kIterLimit;
  int iterations = 0;
};

// Primal active-set iterations from a feasible x0.
CoreResult ActiveSet(const Matrix& H, const Vector& c, const Rows& rows, Vector x0,
                     double tol, int max_iter) {
  const Eigen::Index n = c.size();
  const Eigen::Index m = rows.C.rows();
  const double h_scale = std::max(1.0, H.size() ? H.cwiseAbs().maxCoeff() : 0.0);
  const double curvature_tol = 1e-11 * h_scale;

  CoreResult res;
  res.x = std::move(x0);
  std::vector<char> in_working(static_cast<std::size_t>(m), 0);

  // Seed the working set with constraints active at x0 (independent ones).
  {
    Vector slack = rows.d - rows.C * res.x;
    for (Eigen::Index j = 0; j < m && static_cast<Eigen::Index>(res.working.size()) < n; ++j) {
      if (std::abs(slack(j)) > tol * (1.0 + std::abs(rows.d(j)))) continue;
      Matrix trial(static_cast<Eigen::Index>(res.working.size()) + 1, n);
      for (std::size_t k = 0; k < res.working.size(); ++k) {
        trial.row(static_cast<Eigen::Index>(k)) = rows.C.row(res.working[k]);
      }
      trial.row(trial.rows() - 1) = rows.C.row(j);
      Eigen::ColPivHouseholderQR<Matrix> qr(trial.transpose());
      qr.setThreshold(1e-10);
      if (qr.rank() == trial.rows()) {
        res.working.push_back(j);
        in_working[static_cast<std::size_t>(j)] = 1;
      }
    }
  }

  int zero_steps = 0;
  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    const Eigen::Index k = static_cast<Eigen::Index>(res.working.size());
    const Vector g = H * res.x + c;

    Matrix Y, Z, R;
    if (k > 0) {
      Matrix cwt(n, k);
      for (Eigen::Index a = 0; a < k; ++a) cwt.col(a) = rows.C.row(res.working[static_cast<std::size_t>(a)]).transpose();
      Eigen::HouseholderQR<Matrix> qr(cwt);
      const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
      Y = q.leftCols(k);
      Z = q.rightCols(n - k);
      R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    } else {
      Z = Matrix::Identity(n, n);
    }

    // Search direction within the null space of the working set.
    Vector step = Vector::Zero(n);
    bool newton = true;
    if (Z.cols() > 0) {
      const Matrix hr = Z.transpose() * H * Z;
      const Vector gr = Z.transpose() * g;
      Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (hr + hr.transpose()));
      const Vector& lam = eig.eigenvalues();
      const Matrix& u = eig.eigenvectors();
      const Vector proj = u.transpose() * gr;
      Vector y = Vector::Zero(Z.cols());
      Vector flat = Vector::Zero(Z.cols());
      for (Eigen::Index a = 0; a < lam.size(); ++a) {
        if (lam(a) > curvature_tol) {
          y -= (proj(a) / lam(a)) * u.col(a);
        } else {
          flat += proj(a) * u.col(a);
        }
      }
      if (flat.norm() > tol * (1.0 + g.norm()) * 1e-2) {
        // Zero-curvature descent direction: move until a constraint blocks.
        step = -Z * flat;
        newton = false;
      } else {
        step = Z * y;
      }
    }

    const double step_norm = step.lpNorm<Eigen::Infinity>();
    if (step_norm <= 1e-14 * (1.0 + res.x.lpNorm<Eigen::Infinity>())) {
      // Stationary on the working set: check multipliers.
      if (k == 0) {
        res.lambda.resize(0);
        res.status = QpStatus::kOptimal;
        return res;
      }
      Vector lambda = R.triangularView<Eigen::Upper>().solve(Vector(-Y.transpose() * g));
      Eigen::Index drop = -1;
      double most_negative = -tol;
      for (Eigen::Index a = 0; a < k; ++a) {
        // After repeated zero steps fall back to the smallest-index rule.
        if (zero_steps > 25) {
          if (lambda(a) < -tol &&
              (drop < 0 || res.working[static_cast<std::size_t>(a)] < res.working[static_cast<std::size_t>(drop)])) {
            drop = a;
          }
        } else if (lambda(a) < most_negative) {
          most_negative = lambda(a);
          drop = a;
        }
      }
      if (drop < 0) {
        res.lambda = lambda;
        res.status = QpStatus::kOptimal;
        return res;
      }
      in_working[static_cast<std::size_t>(res.working[static_cast<std::size_t>(drop)])] = 0;
      res.working.erase(res.working.begin() + drop);
      continue;
    }

    // Ratio test.
    double alpha = newton ? 1.0 : kInf;
    Eigen::Index blocking = -1;
    const Vector cs = rows.C * step;
    const Vector slack = rows.d - rows.C * res.x;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (in_working[static_cast<std::size_t>(j)]) continue;
      if (cs(j) <= 1e-12 * (1.0 + rows.C.row(j).lpNorm<Eigen::Infinity>()) * step_norm) continue;
      const double a = std::max(0.0, slack(j)) / cs(j);
      if (a < alpha) {
        alpha = a;
        blocking = j;
      }
    }
    if (!std::isfinite(alpha)) {
      res.status = QpStatus::kUnbounded;
      return res;
    }
    zero_steps = alpha * step_norm <= 1e-15 ? zero_steps + 1 : 0;
    res.x += alpha * step;
    if (blocking >= 0) {
      res.working.push_back(blocking);
      in_working[static_cast<std::size_t>(blocking)] = 1;
    }
  }
  res.status = QpStatus::kIterLimit;
  return res;
}

double Objective(const QpProblem& p, const Vector& v) {
  return 0.5 * v.dot(p.H * v) + p.c.dot(v) + p.constant;
}

double KktResidual(const Matrix& H, const Vector& c, const Rows& rows, const CoreResult& r) {
  Vector grad = H * r.x + c;
  double comp = 0.0;
  for (std::size_t a = 0; a < r.working.size() && static_cast<Eigen::Index>(a) < r.lambda.size(); ++a) {
    const Eigen::Index j = r.working[a];
    const double lam = r.lambda(static_cast<Eigen::Index>(a));
    grad += lam * rows.C.row(j).transpose();
    comp = std::max(comp, std::abs(lam * (rows.d(j) - rows.C.row(j).dot(r.x))));
    comp = std::max(comp, std::max(0.0, -lam));
  }
  const double stat = grad.size() ? grad.lpNorm<Eigen::Infinity>() : 0.0;
  return std::max({stat, comp, RowsViolation(rows, r.x)});
}

void CheckShapes(const QpProblem& p) {
  const Eigen::Index n = p.num_vars();
  const bool ok = p.H.rows() == n && p.H.cols() == n &&
                  (p.A.rows() == 0 || p.A.cols() == n) && p.b.size() == p.A.rows() &&
                  (p.lower.size() == 0 || p.lower.size() == n) &&
                  (p.upper.size() == 0 || p.upper.size() == n);
  if (!ok) throw Error(ErrorCode::kDimensionMismatch, "inconsistent QP dimensions");
}

}  // namespace

const char* ToString(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal: return "Optimal";
    case QpStatus::kInfeasible: return "Infeasible";
    case QpStatus::kIterLimit: return "IterLimit";
    case QpStatus::kUnbounded: return "Unbounded";
  }
  return "Unknown";
}

QpProblem MakeQp(Matrix H, Vector c) {
  QpProblem p;
  const Eigen::Index n = c.size();
  p.H = std::move(H);
  p.c = std::move(c);
  p.A = Matrix(0, n);
  p.b = Vector(0);
  p.lower = Vector::Constant(n, -kInf);
  p.upper = Vector::Constant(n, kInf);
  return p;
}

double MaxViolation(const Matrix& A, const Vector& b, const Vector& lower,
                    const Vector& upper, const Vector& v) {
  double viol = 0.0;
  if (A.rows() > 0) viol = std::max(viol, (A * v - b).maxCoeff());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (lower.size() && std::isfinite(lower(j))) viol = std::max(viol, lower(j) - v(j));
    if (upper.size() && std::isfinite(upper(j))) viol = std::max(viol, v(j) - upper(j));
  }
  return std::max(0.0, viol);
}

Phase1Result FeasibilityPhase1(const Matrix& A, const Vector& b, const Vector& lower,
                               const Vector& upper, const QpOptions& opts) {
  const Eigen::Index n = std::max(A.cols(), std::max(lower.size(), upper.size()));
  const Eigen::Index m = A.rows();
  Vector v0 = opts.warm_start && opts.warm_start->size() == n ? *opts.warm_start
                                                               : Vector(Vector::Zero(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (lower.size() && std::isfinite(lower(j))) v0(j) = std::max(v0(j), lower(j));
    if (upper.size() && std::isfinite(upper(j))) v0(j) = std::min(v0(j), upper(j));
  }
  Phase1Result out;
  if (MaxViolation(A, b, lower, upper, v0) <= opts.tol) {
    out.feasible = true;
    out.v = v0;
    return out;
  }
  // Variables (v, s): A v - s <= b, s >= 0; minimize 0.5 ||s||^2.
  QpProblem p1;
  p1.H = Matrix::Zero(n + m, n + m);
  p1.H.bottomRightCorner(m, m).setIdentity();
  p1.c = Vector::Zero(n + m);
  p1.A = Matrix::Zero(m, n + m);
  if (m > 0) {
    p1.A.leftCols(n) = A;
    p1.A.rightCols(m) = -Matrix::Identity(m, m);
  }
  p1.b = b;
  p1.lower = Vector::Constant(n + m, -kInf);
  p1.upper = Vector::Constant(n + m, kInf);
  if (lower.size()) p1.lower.head(n) = lower;
  if (upper.size()) p1.upper.head(n) = upper;
  p1.lower.tail(m).setZero();
  Vector x0(n + m);
  x0.head(n) = v0;
  x0.tail(m) = m > 0 ? Vector((A * v0 - b).cwiseMax(0.0)) : Vector(0);

  const Rows rows = StackRows(p1);
  CoreResult core = ActiveSet(p1.H, p1.c, rows, x0, opts.tol, opts.max_iter);
  out.v = core.x.head(n);
  out.objective = m > 0 ? core.x.tail(m).squaredNorm() : 0.0;
  out.max_violation = MaxViolation(A, b, lower, upper, out.v);
  out.status = core.status;
  out.feasible = out.max_violation <= opts.tol;
  if (!out.feasible && core.status == QpStatus::kOptimal) out.status = QpStatus::kInfeasible;
  return out;
}

QpSolution SolveQp(const QpProblem& p, const QpOptions& opts) {
  CheckShapes(p);
  const Eigen::Index n = p.num_vars();
  QpProblem prob = p;
  if (prob.lower.size() == 0) prob.lower = Vector::Constant(n, -kInf);
  if (prob.upper.size() == 0) prob.upper = Vector::Constant(n, kInf);
  if (prob.A.rows() == 0) prob.A = Matrix(0, n);

  QpSolution sol;
  QpOptions p1_opts = opts;
  Phase1Result start = FeasibilityPhase1(prob.A, prob.b, prob.lower, prob.upper, p1_opts);
  if (!start.feasible) {
    sol.v = start.v;
    sol.status = start.status == QpStatus::kIterLimit ? QpStatus::kIterLimit
                                                      : QpStatus::kInfeasible;
    sol.max_violation = start.max_violation;
    sol.objective = Objective(prob, sol.v);
    return sol;
  }
  const Rows rows = StackRows(prob);
  CoreResult core = ActiveSet(prob.H, prob.c, rows, start.v, opts.tol, opts.max_iter);
  sol.v = core.x;
  sol.status = core.status;
  sol.iterations = core.iterations;
  sol.objective = Objective(prob, sol.v);
  sol.max_violation = RowsViolation(rows, sol.v);
  sol.kkt_residual = core.status == QpStatus::kOptimal ? KktResidual(prob.H, prob.c, rows, core)
                                                       : std::numeric_limits<double>::infinity();
  return sol;
}

}  // namespace ivqr
