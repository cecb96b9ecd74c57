#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ivqr/data.hpp"
#include "ivqr/miqp.hpp"
#include "ivqr/tsls.hpp"

namespace ivqr {

// s_i = 1{y_i <= w_i'theta} - tau.
Vector SignVector(const Dataset& ds, const Vector& theta, double tau);
Vector SignVector(const Vector& y, const Matrix& w, const Vector& theta, double tau);

// [tau (1 - tau) n^{-1} L'L]^{-1}. Throws kSingularInstruments.
Matrix WeightMatrix(const InstrumentSet& inst, double tau);
Matrix WeightMatrix(const Matrix& l, double tau);

// (G's)' Q (G's) with s = SignVector(theta).
double GmmObjective(const Dataset& ds, const InstrumentSet& inst, const Vector& theta,
                    double tau, const Matrix& q_hat);
double GmmObjective(const Vector& y, const Matrix& w, const Matrix& g, const Vector& theta,
                    double tau, const Matrix& q_hat);

struct GmmSpec {
  double tau = 0.5;
  // Weight matrix; empty selects the default [tau(1-tau) L'L/n]^{-1}.
  std::optional<Matrix> weight;
};

struct GmmFit {
  Vector theta_hat;
  std::vector<std::uint8_t> e_hat;
  double objective = 0.0;
  double gap = 0.0;
  double lower_bound = 0.0;
  BnbStatus status = BnbStatus::kProvedOptimal;
  std::int64_t nodes = 0;
  double solve_seconds = 0.0;  // branch-and-bound wall time only
  int ties = 0;
  Matrix q_hat;
  ParameterBox box;
  TslsFit tsls;
  // For p = 1: the interval of theta consistent with e_hat (within the box).
  std::optional<std::pair<double, double>> theta_interval;
};

// 2SLS -> box -> weight -> big-M -> MIQP -> branch-and-bound.
GmmFit FitIvqrGmm(const Dataset& ds, const InstrumentSet& inst, const GmmSpec& spec,
                  const QuantileSpec& qspec, const BnbOptions& opts = {});

// "0101..." rendering of a sign vector.
std::string SignString(const std::vector<std::uint8_t>& e);

struct OracleResult {
  double objective = 0.0;
  std::vector<std::uint8_t> e;
  // Independent cross-check by evaluating theta candidates (hyperplane
  // arrangement vertices, box vertices, random samples).
  double candidate_objective = 0.0;
  std::vector<std::uint8_t> candidate_e;
  std::int64_t feasible_vectors = 0;
};

inline constexpr int kOracleMaxN = 24;

// Exact minimum of the MIQP by enumerating sign vectors with a phase-1
// feasibility check each. Throws kTooLarge for n > 24.
OracleResult OracleEnumerate(const MiqpProblem& prob, std::uint64_t seed = 1,
                             int random_samples = 10000);
OracleResult OracleEnumerate(const Dataset& ds, const Matrix& l, double tau, const Matrix& q_hat,
                             const ParameterBox& box, double epsilon = 1e-6);

}  // namespace ivqr
