#pragma once

namespace learnsysid {

// Error function, series for |x| <= 2 and a Lentz continued fraction for the
// complementary tail beyond. Absolute error below 1e-12 over the real line.
double erf_impl(double x);
double erfc_impl(double x);

// Standard normal pdf and cdf built on erf_impl.
double normal_pdf(double x);
double normal_cdf(double x);

// Exact-erf GELU, x * cdf(x), and its first four derivatives. The derivative
// chain is what the reverse-mode tape consumes when differentiating through
// its own backward pass.
double gelu(double x);
double gelu_d1(double x);
double gelu_d2(double x);
double gelu_d3(double x);
double gelu_d4(double x);

}  // namespace learnsysid
