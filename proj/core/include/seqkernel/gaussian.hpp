#pragma once

namespace seqkernel {

double normal_cdf(double x);
// Inverse standard normal CDF: rational approximation polished by one Halley step.
double normal_quantile(double p);
// Two-sided critical value for a confidence level in (0, 1).
double critical_value(double level);

}  // namespace seqkernel
