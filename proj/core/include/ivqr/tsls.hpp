#pragma once

#include "ivqr/data.hpp"

namespace ivqr {

struct TslsFit {
  Vector theta;      // coefficients on W = [D X]
  Vector robust_se;  // HC0 sandwich
  Vector residuals;  // y - W theta
  // Set when some robust_se entry is (numerically) zero, e.g. an exact fit.
  bool degenerate_variance = false;
};

// Two-stage least squares of y on W with instruments L. Throws
// kSingularInstruments if L^T L is singular and kRankDeficient if the
// projected design is.
TslsFit FitTsls(const Dataset& ds, const InstrumentSet& inst);

// Axis-aligned parameter region [lo_j, hi_j].
struct ParameterBox {
  Vector lo;
  Vector hi;

  Eigen::Index dim() const { return lo.size(); }
  Vector Center() const { return 0.5 * (lo + hi); }
  bool Contains(const Vector& theta, double tol = 0.0) const;
};

// Standard errors below this are replaced by max(1, |theta_j|).
inline constexpr double kDegenerateSe = 1e-10;

// theta_j -/+ scale * se_j per coordinate.
ParameterBox BuildParameterBox(const TslsFit& fit, double scale);

}  // namespace ivqr
