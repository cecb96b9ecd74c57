#include "ivqr/tsls.hpp"

#include <cmath>

#include "ivqr/error.hpp"

namespace ivqr {

TslsFit FitTsls(const Dataset& ds, const InstrumentSet& inst) {
  const Matrix w = ds.W();
  const Matrix& l = inst.l;
  if (l.rows() != ds.n()) {
    throw Error(ErrorCode::kInconsistentDimensions, "instrument rows differ from n");
  }
  if (l.cols() < w.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "fewer instruments than covariates");
  }
  numerics::SpdFactor ll;
  try {
    ll = numerics::FactorSpd(numerics::Symmetrize(l.transpose() * l));
  } catch (const Error& e) {
    throw Error(ErrorCode::kSingularInstruments, e.what());
  }
  // Projected design: W_hat = L (L'L)^{-1} L' W.
  const Matrix w_hat = l * numerics::SolveSpd(ll, Matrix(l.transpose() * w));
  numerics::SpdFactor bread;
  try {
    bread = numerics::FactorSpd(numerics::Symmetrize(w_hat.transpose() * w_hat));
  } catch (const Error& e) {
    throw Error(ErrorCode::kRankDeficient,
                std::string("projected design is singular: ") + e.what());
  }

  TslsFit fit;
  fit.theta = numerics::SolveSpd(bread, Vector(w_hat.transpose() * ds.y));
  fit.residuals = ds.y - w * fit.theta;

  const Matrix scaled = w_hat.array().colwise() * fit.residuals.array();
  const Matrix meat = scaled.transpose() * scaled;
  const Matrix bread_inv = numerics::SolveSpd(
      bread, Matrix(Matrix::Identity(w.cols(), w.cols())));
  const Matrix cov = bread_inv * meat * bread_inv;
  fit.robust_se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index j = 0; j < fit.robust_se.size(); ++j) {
    if (fit.robust_se(j) < kDegenerateSe) fit.degenerate_variance = true;
  }
  return fit;
}

bool ParameterBox::Contains(const Vector& theta, double tol) const {
  if (theta.size() != lo.size()) return false;
  return ((theta - lo).array() >= -tol).all() && ((hi - theta).array() >= -tol).all();
}

ParameterBox BuildParameterBox(const TslsFit& fit, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "box scale must be positive");
  ParameterBox box;
  const Eigen::Index p = fit.theta.size();
  box.lo.resize(p);
  box.hi.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double se = fit.robust_se(j);
    if (!(se >= kDegenerateSe)) se = std::max(1.0, std::abs(fit.theta(j)));
    box.lo(j) = fit.theta(j) - scale * se;
    box.hi(j) = fit.theta(j) + scale * se;
  }
  return box;
}

}  // namespace ivqr
