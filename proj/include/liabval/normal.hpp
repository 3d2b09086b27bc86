#pragma once

#include <cmath>
#include <numbers>

#include "liabval/errors.hpp"

namespace liabval {

template <typename Scalar>
Scalar norm_pdf(Scalar x) {
  using std::exp;
  return exp(Scalar(-0.5) * x * x) / std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>);
}

template <typename Scalar>
Scalar norm_cdf(Scalar x) {
  using std::erfc;
  return Scalar(0.5) * erfc(-x / std::numbers::sqrt2_v<Scalar>);
}

// Inverse of the standard normal CDF. Acklam's rational approximation
// (relative error ~1e-9) followed by one Halley step against the erfc-based
// CDF, which brings the absolute error to the 1e-15 range.
template <typename Scalar>
Scalar norm_quantile(Scalar p) {
  if (!(p > Scalar(0) && p < Scalar(1))) {
    throw ArgumentError("norm_quantile: probability must lie in (0,1)");
  }
  constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                          -2.759285104469687e+02, 1.383577518672690e+02,
                          -3.066479806614716e+01, 2.506628277459239e+00};
  constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                          -1.556989798598866e+02, 6.680131188771972e+01,
                          -1.328068155288572e+01};
  constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                          -2.400758277161838e+00, -2.549732539343734e+00,
                          4.374664141464968e+00,  2.938163982698783e+00};
  constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                          2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  Scalar x;
  if (p < Scalar(p_low)) {
    Scalar q = std::sqrt(Scalar(-2) * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= Scalar(1 - p_low)) {
    Scalar q = p - Scalar(0.5);
    Scalar r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    Scalar q = std::sqrt(Scalar(-2) * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }

  // Halley refinement. For upper-tail p the residual is formed from the
  // complementary CDF to avoid cancellation.
  Scalar e = (p > Scalar(0.5)) ? (Scalar(1) - p) - norm_cdf(-x) : norm_cdf(x) - p;
  Scalar u = e * std::sqrt(Scalar(2) * std::numbers::pi_v<Scalar>) * std::exp(x * x / 2);
  x = x - u / (Scalar(1) + x * u / 2);
  return x;
}

}  // namespace liabval
