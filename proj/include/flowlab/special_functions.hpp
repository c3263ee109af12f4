#pragma once

namespace flowlab {

// Exponential integral E1(x) = ∫_x^∞ e^{-v}/v dv for x > 0.
// Power series below x=1, modified Lentz continued fraction above.
// Absolute accuracy better than 1e-14 over [1e-300, 700].
double exp_integral_e1(double x);

// Bessel functions of the first kind. Series for small argument,
// Hankel asymptotic expansion for large argument; |error| <= 1e-12
// for 0 <= x <= 1e3.
double bessel_j0(double x);
double bessel_j1(double x);

// J2 via the recurrence 2*J1(x)/x - J0(x); series branch below
// x=1e-4 where the recurrence loses digits to cancellation.
double bessel_j2(double x);

// Order-dispatched entry point; n must be 0, 1 or 2.
double bessel_j(int n, double x);

}  // namespace flowlab
