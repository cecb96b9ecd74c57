#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ivqr/data.hpp"
#include "ivqr/inference.hpp"
#include "ivqr/miqp.hpp"

namespace ivqr::sim {

// Location-scale design:
//   Y  = 1 + D1 + D2 + D3 + (0.5 + D1 + 0.25 D2 + 0.15 D3) eps
//   D1 = Phi(Z1 + v1), D2 = 2 Phi(Z2 + v2), D3 = 1.5 Phi(Z3 + v3)
// with Z iid N(0,1) and (eps, v1, v2, v3) ~ N(0, 0.25 V).
struct DgpConfig {
  Eigen::Index n = 100;
  std::uint64_t seed = 42;
  double v_scale = 0.25;
  Matrix v = DefaultV();

  static Matrix DefaultV();
};

void Validate(const DgpConfig& cfg);

// Uniform doubles in (0, 1) from mt19937_64; normals by inverse cdf. Each
// observation consumes 7 normals in the order Z1, Z2, Z3, then the four
// innovations (eps, v1, v2, v3) mixed through chol(0.25 V).
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed);
  double Uniform();
  double Normal();

 private:
  std::mt19937_64 engine_;
};

// Dataset with D = (D1, D2, D3), X = (1), Z = (Z1, Z2, Z3); W = [D X] so the
// intercept is the last coefficient. L = [X Z] = (1, Z1, Z2, Z3).
Dataset Generate(const DgpConfig& cfg);

// Paper-order true coefficients (theta0, theta1, theta2, theta3)(tau).
Vector TrueTheta(double tau);

// TrueTheta reordered to the dataset's W = (D1, D2, D3, 1) layout.
Vector TrueThetaWOrder(double tau);

// Index into W order of paper coefficient k (0 = intercept).
Eigen::Index WIndexOfCoefficient(int k);

// Asymptotic standard errors at the true parameters, sqrt(Omega_jj / n), with
// the expectations in Omega evaluated by Monte Carlo over `draws` samples.
// Returned in paper order.
Vector PopulationAsymptoticSe(double tau, Eigen::Index n, Eigen::Index draws = 1000000,
                              std::uint64_t seed = 7);

// Small random IV instance for oracle cross-checks: p in {1, 2}, q in [p, 3].
// p = 1 is W = D, L = Z; p = 2 adds an intercept to both.
struct SmallInstance {
  Dataset ds;
  InstrumentSet inst;
};
SmallInstance RandomSmallInstance(Eigen::Index n, int p, int q, std::uint64_t seed);

struct McOptions {
  std::vector<double> taus{0.25, 0.5, 0.75};
  int reps = 100;
  std::vector<double> bandwidth_multipliers{0.8, 1.0, 1.2};
  double alpha = 0.05;
  double epsilon = 1e-6;
  double box_scale = 10.0;
  Kernel kernel = Kernel::kGaussian;
  BnbOptions bnb;
  int threads = 1;  // repetitions in parallel
  bool population_se = true;
  // Called after each finished repetition with (done, total).
  std::function<void(int, int)> progress;
};

struct CoefficientSummary {
  double tau = 0.0;
  int coefficient = 0;  // paper index
  double truth = 0.0;
  double mean_bias = 0.0;
  double median_bias = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  double sd = 0.0;
  double mean_se = 0.0;        // mean estimated se at multiplier 1 (or first)
  double population_se = 0.0;  // asymptotic se at the true parameters
  std::vector<double> coverage;  // per bandwidth multiplier
  int used = 0;                  // repetitions contributing
};

struct TimingSummary {
  double tau = 0.0;
  double mean = 0.0, min = 0.0, median = 0.0, max = 0.0;
  double mean_nodes = 0.0;
  int not_optimal = 0;
};

struct McSummary {
  DgpConfig cfg;
  McOptions opts;
  std::vector<CoefficientSummary> rows;  // tau-major, coefficient-minor
  std::vector<TimingSummary> timing;
  int failures = 0;
  int attempts = 0;
  // Per repetition, per tau: GMM objective (for determinism checks).
  std::vector<std::vector<double>> objectives;
};

McSummary RunMonteCarlo(const DgpConfig& cfg, const McOptions& opts);

std::string SummaryCsv(const McSummary& s);
std::string SummaryMarkdown(const McSummary& s);

}  // namespace ivqr::sim
