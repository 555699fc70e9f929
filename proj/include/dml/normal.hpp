#pragma once

namespace dml {

/// Standard normal CDF via std::erfc.
double normal_cdf(double x);

/// Inverse standard normal CDF. Acklam's rational approximation followed by one
/// Halley step against normal_cdf; absolute error below 1e-9 on (0, 1).
/// Throws OutOfDomain unless 0 < p < 1.
double normal_quantile(double p);

}  // namespace dml
