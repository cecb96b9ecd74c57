#include "ivqr/inference.hpp"

#include <cmath>
#include <sstream>

#include "ivqr/error.hpp"
#include "ivqr/normal.hpp"

namespace ivqr {

Bandwidth HallSheather(Eigen::Index n, double tau, double alpha, double multiplier) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "Hall-Sheather needs n >= 2");
  if (!(tau > 0.0 && tau < 1.0) || !(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tau and alpha must lie in (0, 1)");
  }
  const double x = NormalQuantile(tau);
  const double z = NormalQuantile(1.0 - alpha / 2.0);
  const double f = NormalPdf(x);
  const double bracket = 1.5 * f * f / (2.0 * x * x + 1.0);
  Bandwidth h;
  h.rule = BandwidthRule::kHallSheather;
  h.multiplier = multiplier;
  h.value = multiplier * std::pow(static_cast<double>(n), -1.0 / 3.0) *
            std::pow(z, 2.0 / 3.0) * std::cbrt(bracket);
  return h;
}

double KernelValue(Kernel k, double u) {
  switch (k) {
    case Kernel::kGaussian: return NormalPdf(u);
    case Kernel::kEpanechnikov: return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
  }
  return 0.0;
}

Matrix PowellSigmaWl(const Vector& y, const Matrix& w, const Matrix& l,
                     const Vector& theta_hat, double h, Kernel kernel) {
  if (!(h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "bandwidth must be positive");
  if (w.rows() != y.size() || l.rows() != y.size() || theta_hat.size() != w.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "Powell estimator: inconsistent dimensions");
  }
  const Vector res = y - w * theta_hat;
  Vector k(res.size());
  for (Eigen::Index i = 0; i < res.size(); ++i) k(i) = KernelValue(kernel, res(i) / h) / h;
  return w.transpose() * k.asDiagonal() * l / static_cast<double>(y.size());
}

Matrix PowellSigmaWl(const Dataset& ds, const InstrumentSet& inst, const Vector& theta_hat,
                     const Bandwidth& h, Kernel kernel) {
  return PowellSigmaWl(ds.y, ds.W(), inst.l, theta_hat, h.value, kernel);
}

Matrix SigmaLl(const Matrix& l) {
  return numerics::Symmetrize(l.transpose() * l / static_cast<double>(l.rows()));
}

Matrix AsymptoticVariance(const Matrix& sigma_wl, const Matrix& sigma_ll, double tau) {
  if (sigma_wl.cols() != sigma_ll.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "Sigma_WL and Sigma_LL disagree");
  }
  const numerics::SpdFactor ll = numerics::FactorSpd(numerics::Symmetrize(sigma_ll));
  const Matrix bracket = numerics::Symmetrize(
      sigma_wl * numerics::SolveSpd(ll, Matrix(sigma_wl.transpose())));
  try {
    return numerics::Symmetrize(tau * (1.0 - tau) * numerics::InvertSpd(bracket));
  } catch (const Error&) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(bracket);
    std::ostringstream msg;
    msg << "bracket matrix not positive definite, smallest eigenvalue "
        << eig.eigenvalues().minCoeff();
    throw Error(ErrorCode::kDegenerateDesign, msg.str());
  }
}

void ConfidenceIntervals(const Vector& theta_hat, const Matrix& omega, Eigen::Index n,
                         double alpha, InferenceReport& report) {
  const double z = NormalQuantile(1.0 - alpha / 2.0);
  report.alpha = alpha;
  report.se.resize(theta_hat.size());
  report.ci.clear();
  for (Eigen::Index j = 0; j < theta_hat.size(); ++j) {
    report.se(j) = std::sqrt(std::max(0.0, omega(j, j)) / static_cast<double>(n));
    report.ci.emplace_back(theta_hat(j) - z * report.se(j), theta_hat(j) + z * report.se(j));
  }
}

InferenceReport Infer(const Vector& y, const Matrix& w, const Matrix& l,
                      const Vector& theta_hat, double tau, const InferenceOptions& opts) {
  InferenceReport rep;
  const double h = opts.fixed_bandwidth > 0.0
                       ? opts.fixed_bandwidth * opts.bandwidth_multiplier
                       : HallSheather(y.size(), tau, opts.alpha, opts.bandwidth_multiplier).value;
  rep.bandwidth = h;
  rep.sigma_wl = PowellSigmaWl(y, w, l, theta_hat, h, opts.kernel);
  rep.sigma_ll = SigmaLl(l);
  rep.omega = AsymptoticVariance(rep.sigma_wl, rep.sigma_ll, tau);
  ConfidenceIntervals(theta_hat, rep.omega, y.size(), opts.alpha, rep);
  return rep;
}

InferenceReport Infer(const Dataset& ds, const InstrumentSet& inst, const Vector& theta_hat,
                      double tau, const InferenceOptions& opts) {
  return Infer(ds.y, ds.W(), inst.l, theta_hat, tau, opts);
}

}  // namespace ivqr
