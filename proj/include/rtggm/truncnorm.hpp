#pragma once

#include "rtggm/rng.hpp"

namespace rtggm {

// Normal distribution N(xi, lambda_sq) truncated to [0, inf).
struct TruncNormParams {
  double xi = 0.0;         // location of the untruncated normal
  double lambda_sq = 1.0;  // variance of the untruncated normal, > 0
};

// log of the standard normal density at t.
double std_normal_log_pdf(double t);

// log Phi(t), finite for |t| <= 1e6. Uses erfc for t >= -30 and a Mills-type
// asymptotic tail expansion below; relative accuracy ~1e-12 in the deep tail.
double std_normal_log_cdf(double t);

// Hazard ratio phi(t) / Phi(t). Strictly positive, strictly decreasing;
// ~ -t for t -> -inf, -> phi(t) for t -> +inf.
double hazard_ratio(double t);

// Mean of the [0, inf)-truncated normal: xi + lambda * hazard(xi / lambda).
// Always > max(0, xi) analytically (up to rounding at extreme parameters).
double trunc_mean(const TruncNormParams& p);

// Variance of the [0, inf)-truncated normal:
//   lambda_sq * (1 - r * (r + beta)),  beta = xi / lambda,  r = hazard(beta).
// Lies in (0, lambda_sq].
double trunc_var(const TruncNormParams& p);

// Second moment E[h^2] = trunc_var + trunc_mean^2, computed directly as
// lambda_sq + xi^2 + xi * lambda * hazard(xi / lambda) (algebraically equal,
// cheaper, and the form the precision-parameter gradient needs).
double trunc_second_moment(const TruncNormParams& p);

// Exact draw from the truncated normal. Naive Gaussian rejection while the
// standardized lower bound alpha = -xi/lambda < 0.4 (acceptance >= 0.34);
// translated-exponential rejection (Robert's method) otherwise.
double sample_trunc(const TruncNormParams& p, RngStream& rng);

}  // namespace rtggm
