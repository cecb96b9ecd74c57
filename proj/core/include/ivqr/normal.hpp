#pragma once

namespace ivqr {

// Standard normal density, cdf and quantile. The quantile uses Wichura's
// AS241 (PPND16) rational approximation, relative accuracy about 1e-16.
double NormalPdf(double x);
double NormalCdf(double x);
double NormalQuantile(double p);

}  // namespace ivqr
