#pragma once

namespace omicscl {

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

// Upper tail of the chi-square distribution with df degrees of freedom.
double chi2_sf(double x, int df);

}  // namespace omicscl
