#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ivqr/data.hpp"
#include "ivqr/tsls.hpp"

namespace ivqr {

// m_i >= |y_i - w_i' theta| for every theta in the box.
struct BigM {
  Vector m;
};

// Closed-form max over the box of |y_i - w_i' theta|.
BigM ComputeBigM(const Vector& y, const Matrix& w, const ParameterBox& box);
BigM ComputeBigM(const Dataset& ds, const ParameterBox& box);

// Mixed integer QP in (e, theta):
//   min  (e - tau 1)' G Q G' (e - tau 1)
//   s.t. w_i'theta - (m_i + eps + margin) e_i <= y_i - margin
//        -w_i'theta + m_i e_i                 <= m_i - y_i
//        theta in box, e binary.
// The first row is the closed form of the strict lower sign constraint:
// e_i = 0 forces a residual of at least `margin`, e_i = 1 forces it to be
// non-positive.
struct MiqpProblem {
  Vector y;
  Matrix w;      // n x p
  Matrix g;      // n x q instruments
  Matrix q_hat;  // q x q SPD weight
  double tau = 0.5;
  double epsilon = 1e-6;
  double margin = 1e-6;
  ParameterBox box;
  BigM big_m;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return w.cols(); }
  Eigen::Index q() const { return g.cols(); }

  double Objective(const Vector& e) const;

  // Rows over v = (e, theta): 2n inequality rows, `ConstraintRhs` on the right.
  Matrix ConstraintMatrix() const;
  Vector ConstraintRhs() const;

  // Linear rows restricting theta for a fixed binary e (2n rows).
  void ThetaRowsForSigns(const std::vector<std::uint8_t>& e, Matrix& a, Vector& b) const;

  // Max violation of all constraints, integrality and box at (e, theta).
  double Violation(const std::vector<std::uint8_t>& e, const Vector& theta) const;
};

MiqpProblem BuildProblem(const Dataset& ds, const InstrumentSet& inst,
                         const QuantileSpec& spec, const ParameterBox& box,
                         const Matrix& q_hat);

// Lower-level overload used by the oracle harness and fault injection.
MiqpProblem BuildProblem(const Vector& y, const Matrix& w, const Matrix& g,
                         const QuantileSpec& spec, const ParameterBox& box,
                         const Matrix& q_hat, const BigM& big_m);

struct Incumbent {
  std::vector<std::uint8_t> e;
  double objective = 0.0;
  // Observations with 0 < residual < margin; such a theta admits no
  // feasible e and the pair is rejected by the solver.
  int margin_violations = 0;
};

// e_i = 1{y_i - w_i'theta <= 0}, objective evaluated exactly.
Incumbent HeuristicIncumbent(const MiqpProblem& prob, const Vector& theta);

enum class BnbStatus { kProvedOptimal, kGapReached, kTimeLimit, kNodeLimit };

const char* ToString(BnbStatus s);

struct BnbOptions {
  // Absolute gap target; <= 0 selects 1e-9 * (1 + |objective|).
  double abs_gap = 0.0;
  double rel_gap = 0.0;
  double time_limit_seconds = 0.0;  // <= 0: unlimited
  std::int64_t node_limit = 0;      // <= 0: unlimited
  int threads = 1;
  // Optional line-delimited JSON trace, one record per processed node.
  std::ostream* node_log = nullptr;
};

// Search-tree node. `status[i]` is +1 (e_i fixed to 1), -1 (fixed to 0) or
// 0 (free). Fixings include those implied by the branching rows.
struct BnbNode {
  std::vector<std::int8_t> status;
  std::vector<std::int32_t> branched;  // +(i+1): e_i = 1, -(i+1): e_i = 0
  std::vector<Vector> points;          // known points of the node polytope
  Vector relax_e;                      // parent relaxation (warm start)
  double lower_bound = 0.0;
  int depth = 0;

  std::vector<int> Fixed0() const;
  std::vector<int> Fixed1() const;
};

struct BnbResult {
  Vector theta_hat;
  std::vector<std::uint8_t> e_hat;
  double objective = 0.0;
  double lower_bound = 0.0;
  double gap = 0.0;
  std::int64_t nodes_explored = 0;
  std::int64_t lp_solves = 0;
  std::chrono::duration<double> wall_time{0.0};
  BnbStatus status = BnbStatus::kProvedOptimal;
  // Observations with |y_i - w_i'theta_hat| < margin.
  int ties = 0;
  // Largest constraint violation of (e_hat, theta_hat).
  double max_violation = 0.0;
};

BnbResult BranchAndBound(const MiqpProblem& prob, const BnbOptions& opts = {});

// Lower bound of the node relaxation in which e_i for i in `free_idx` range
// over [0, 1] and the others are fixed to `fixed_e`. Exposed for tests.
struct RelaxationBound {
  double lower_bound = 0.0;  // certified (Frank-Wolfe dual) bound
  double primal = 0.0;       // relaxation objective at `e`
  Vector e;                  // relaxed values of the free coordinates
};
RelaxationBound SolveNodeRelaxation(const MiqpProblem& prob,
                                    const std::vector<std::int8_t>& status,
                                    const Vector& warm_e, double cutoff);

}  // namespace ivqr
