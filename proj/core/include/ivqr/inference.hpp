#pragma once

#include <utility>
#include <vector>

#include "ivqr/data.hpp"

namespace ivqr {

enum class BandwidthRule { kHallSheather, kFixed };

struct Bandwidth {
  double value = 0.0;
  BandwidthRule rule = BandwidthRule::kHallSheather;
  double multiplier = 1.0;  // applied on top of the rule (0.8 / 1.2 sweeps)
};

// h = n^{-1/3} z^{2/3} [1.5 phi(Phi^{-1}(tau))^2 / (2 Phi^{-1}(tau)^2 + 1)]^{1/3},
// z = Phi^{-1}(1 - alpha/2).
Bandwidth HallSheather(Eigen::Index n, double tau, double alpha, double multiplier = 1.0);

enum class Kernel { kGaussian, kEpanechnikov };

double KernelValue(Kernel k, double u);

// n^{-1} sum_i K(res_i / h) / h * w_i l_i', residuals y - W theta_hat.
Matrix PowellSigmaWl(const Vector& y, const Matrix& w, const Matrix& l,
                     const Vector& theta_hat, double h, Kernel kernel = Kernel::kGaussian);
Matrix PowellSigmaWl(const Dataset& ds, const InstrumentSet& inst, const Vector& theta_hat,
                     const Bandwidth& h, Kernel kernel = Kernel::kGaussian);

// n^{-1} L'L.
Matrix SigmaLl(const Matrix& l);

// tau (1 - tau) [S_wl S_ll^{-1} S_wl']^{-1}. Throws kDegenerateDesign with the
// smallest eigenvalue of the bracket when it is not positive definite.
Matrix AsymptoticVariance(const Matrix& sigma_wl, const Matrix& sigma_ll, double tau);

struct InferenceReport {
  Matrix sigma_wl;
  Matrix sigma_ll;
  Matrix omega;
  Vector se;
  std::vector<std::pair<double, double>> ci;
  double alpha = 0.05;
  double bandwidth = 0.0;
};

// se_j = sqrt(omega_jj / n), ci_j = theta_j -/+ Phi^{-1}(1 - alpha/2) se_j.
void ConfidenceIntervals(const Vector& theta_hat, const Matrix& omega, Eigen::Index n,
                         double alpha, InferenceReport& report);

struct InferenceOptions {
  double alpha = 0.05;
  double bandwidth_multiplier = 1.0;
  Kernel kernel = Kernel::kGaussian;
  // Fixed bandwidth overriding the Hall-Sheather rule when > 0.
  double fixed_bandwidth = 0.0;
};

InferenceReport Infer(const Dataset& ds, const InstrumentSet& inst, const Vector& theta_hat,
                      double tau, const InferenceOptions& opts = {});
InferenceReport Infer(const Vector& y, const Matrix& w, const Matrix& l,
                      const Vector& theta_hat, double tau, const InferenceOptions& opts = {});

}  // namespace ivqr
