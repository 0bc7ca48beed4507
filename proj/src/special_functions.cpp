#include "learnsysid/special_functions.hpp"

#include <cmath>
#include <limits>

namespace learnsysid {

namespace {

constexpr double kInvSqrtPi = 0.5641895835477562869;   // 1/sqrt(pi)
constexpr double kInvSqrt2 = 0.7071067811865475244;    // 1/sqrt(2)
constexpr double kInvSqrt2Pi = 0.3989422804014326779;  // 1/sqrt(2*pi)

// Maclaurin series: erf(x) = 2/sqrt(pi) * sum_n (-1)^n x^(2n+1) / (n! (2n+1)).
// Converges fast for |x| <= 2 (worst case ~30 terms).
double erf_series(double x) {
  const double x2 = x * x;
  double term = x;  // n = 0 term before the 1/(2n+1) factor
  double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= -x2 / n;
    const double contrib = term / (2 * n + 1);
    sum += contrib;
    if (std::fabs(contrib) < 1e-20 * std::fabs(sum)) break;
  }
  return 2.0 * kInvSqrtPi * sum;
}

// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
// for x > 0, evaluated with the modified Lentz algorithm. Used for x > 2
// where the series loses relative accuracy.
double erfc_cf(double x) {
  const double tiny = 1e-300;
  double f = x;  // b0
  if (f == 0.0) f = tiny;
  double c = f;
  double d = 0.0;
  for (int n = 1; n < 300; ++n) {
    const double a = 0.5 * n;
    d = x + a * d;
    if (d == 0.0) d = tiny;
    c = x + a / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-17) break;
  }
  return std::exp(-x * x) * kInvSqrtPi / f;
}

}  // namespace

double erfc_impl(double x) {
  if (x < 0.0) return 2.0 - erfc_impl(-x);
  if (x <= 2.0) return 1.0 - erf_series(x);
  if (x > 27.0) return 0.0;  // below double underflow of exp(-x^2)
  return erfc_cf(x);
}

double erf_impl(double x) {
  if (std::isnan(x)) return x;
  const double ax = std::fabs(x);
  if (ax <= 2.0) return erf_series(x);
  const double tail = erfc_impl(ax);
  return x > 0.0 ? 1.0 - tail : tail - 1.0;
}

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * (1.0 + erf_impl(x * kInvSqrt2)); }

double gelu(double x) { return x * normal_cdf(x); }

double gelu_d1(double x) { return normal_cdf(x) + x * normal_pdf(x); }

// Higher derivatives follow from phi'(x) = -x phi(x):
//   g''  = phi(x) (2 - x^2)
//   g''' = phi(x) (x^3 - 4x)
//   g'''' = phi(x) (-x^4 + 7x^2 - 4)
double gelu_d2(double x) { return normal_pdf(x) * (2.0 - x * x); }

double gelu_d3(double x) {
  const double x2 = x * x;
  return normal_pdf(x) * (x2 * x - 4.0 * x);
}

double gelu_d4(double x) {
  const double x2 = x * x;
  return normal_pdf(x) * (-x2 * x2 + 7.0 * x2 - 4.0);
}

}  // namespace learnsysid
