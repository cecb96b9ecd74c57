#include "ivqr/miqp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ivqr/error.hpp"

namespace ivqr {

BigM ComputeBigM(const Vector& y, const Matrix& w, const ParameterBox& box) {
  if (w.cols() != box.dim() || w.rows() != y.size()) {
    throw Error(ErrorCode::kInconsistentDimensions, "big-M: W, y and box disagree");
  }
  BigM out;
  out.m.resize(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double hi = 0.0;
    double lo = 0.0;
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      const double wij = w(i, j);
      hi += wij > 0.0 ? wij * box.hi(j) : wij * box.lo(j);
      lo += wij > 0.0 ? wij * box.lo(j) : wij * box.hi(j);
    }
    out.m(i) = std::max(std::abs(y(i) - lo), std::abs(y(i) - hi));
  }
  return out;
}

BigM ComputeBigM(const Dataset& ds, const ParameterBox& box) {
  return ComputeBigM(ds.y, ds.W(), box);
}

double MiqpProblem::Objective(const Vector& e) const {
  const Vector u = g.transpose() * (e.array() - tau).matrix();
  return u.dot(q_hat * u);
}

Matrix MiqpProblem::ConstraintMatrix() const {
  const Eigen::Index nn = n();
  Matrix a = Matrix::Zero(2 * nn, nn + p());
  for (Eigen::Index i = 0; i < nn; ++i) {
    a(i, i) = -(big_m.m(i) + epsilon + margin);
    a.row(i).tail(p()) = w.row(i);
    a(nn + i, i) = big_m.m(i);
    a.row(nn + i).tail(p()) = -w.row(i);
  }
  return a;
}

Vector MiqpProblem::ConstraintRhs() const {
  const Eigen::Index nn = n();
  Vector b(2 * nn);
  b.head(nn) = y.array() - margin;
  b.tail(nn) = big_m.m - y;
  return b;
}

void MiqpProblem::ThetaRowsForSigns(const std::vector<std::uint8_t>& e, Matrix& a,
                                    Vector& b) const {
  const Eigen::Index nn = n();
  a.resize(2 * nn, p());
  b.resize(2 * nn);
  for (Eigen::Index i = 0; i < nn; ++i) {
    const double ei = e[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    a.row(i) = w.row(i);
    b(i) = y(i) - margin + ei * (big_m.m(i) + epsilon + margin);
    a.row(nn + i) = -w.row(i);
    b(nn + i) = big_m.m(i) - y(i) - big_m.m(i) * ei;
  }
}

double MiqpProblem::Violation(const std::vector<std::uint8_t>& e,
                              const Vector& theta) const {
  Matrix a;
  Vector b;
  ThetaRowsForSigns(e, a, b);
  double viol = std::max(0.0, (a * theta - b).maxCoeff());
  viol = std::max(viol, (box.lo - theta).maxCoeff());
  viol = std::max(viol, (theta - box.hi).maxCoeff());
  return viol;
}

MiqpProblem BuildProblem(const Vector& y, const Matrix& w, const Matrix& g,
                         const QuantileSpec& spec, const ParameterBox& box,
                         const Matrix& q_hat, const BigM& big_m) {
  Validate(spec);
  const Eigen::Index n = y.size();
  if (w.rows() != n || g.rows() != n || big_m.m.size() != n ||
      box.dim() != w.cols() || q_hat.rows() != g.cols() || q_hat.cols() != g.cols()) {
    std::ostringstream msg;
    msg << "n=" << n << " W " << w.rows() << "x" << w.cols() << ", G " << g.rows()
        << "x" << g.cols() << ", Q " << q_hat.rows() << "x" << q_hat.cols()
        << ", box " << box.dim() << ", M " << big_m.m.size();
    throw Error(ErrorCode::kInconsistentDimensions, msg.str());
  }
  for (Eigen::Index j = 0; j < box.dim(); ++j) {
    if (!(box.lo(j) < box.hi(j))) {
      throw Error(ErrorCode::kInvalidArgument, "parameter box has an empty side");
    }
  }
  numerics::FactorSpd(numerics::Symmetrize(q_hat));
  MiqpProblem prob;
  prob.y = y;
  prob.w = w;
  prob.g = g;
  prob.q_hat = numerics::Symmetrize(q_hat);
  prob.tau = spec.tau;
  prob.epsilon = spec.epsilon;
  prob.margin = spec.epsilon;
  prob.box = box;
  prob.big_m = big_m;
  return prob;
}

MiqpProblem BuildProblem(const Dataset& ds, const InstrumentSet& inst,
                         const QuantileSpec& spec, const ParameterBox& box,
                         const Matrix& q_hat) {
  const Matrix w = ds.W();
  return BuildProblem(ds.y, w, inst.l, spec, box, q_hat, ComputeBigM(ds.y, w, box));
}

Incumbent HeuristicIncumbent(const MiqpProblem& prob, const Vector& theta) {
  Incumbent inc;
  const Vector r = prob.y - prob.w * theta;
  inc.e.resize(static_cast<std::size_t>(prob.n()));
  Vector e(prob.n());
  for (Eigen::Index i = 0; i < prob.n(); ++i) {
    const bool below = r(i) <= 0.0;
    inc.e[static_cast<std::size_t>(i)] = below ? 1 : 0;
    e(i) = below ? 1.0 : 0.0;
    if (!below && r(i) < prob.margin) ++inc.margin_violations;
  }
  inc.objective = prob.Objective(e);
  return inc;
}

const char* ToString(BnbStatus s) {
  switch (s) {
    case BnbStatus::kProvedOptimal: return "ProvedOptimal";
    case BnbStatus::kGapReached: return "GapReached";
    case BnbStatus::kTimeLimit: return "TimeLimit";
    case BnbStatus::kNodeLimit: return "NodeLimit";
  }
  return "Unknown";
}

std::vector<int> BnbNode::Fixed0() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < status.size(); ++i) {
    if (status[i] < 0) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> BnbNode::Fixed1() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < status.size(); ++i) {
    if (status[i] > 0) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace ivqr
