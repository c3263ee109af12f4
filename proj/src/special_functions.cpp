#include "flowlab/special_functions.hpp"

#include <cmath>
#include <stdexcept>

namespace flowlab {

namespace {

constexpr double kEulerGamma = 0.577215664901532860606512090082;

// E1(x) = -gamma - log x + sum_{k>=1} (-1)^{k+1} x^k / (k * k!), x <= 1.
double e1_series(double x) {
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k <= 64; ++k) {
        term *= -x / k;
        const double add = -term / k;
        sum += add;
        if (std::fabs(add) < 1e-18 * std::fabs(sum)) break;
    }
    return -kEulerGamma - std::log(x) + sum;
}

// Continued fraction e^{-x}/(x+1/(1+1/(x+2/(1+...)))) evaluated by the
// modified Lentz algorithm; stable for x >= 1.
double e1_continued_fraction(double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 300; ++i) {
        const double an = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        const double delta = c * d;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x);
}

// Hankel asymptotic factors P, Q for J0/J1 at x >= 8, giving
// J_n(x) = sqrt(2/(pi x)) * (P cos(chi) - Q sin(chi)), chi = x - (2n+1)pi/4.
void hankel_pq(int n, double x, double* p, double* q) {
    const double mu = 4.0 * n * n;
    const double inv8x = 1.0 / (8.0 * x);
    double pk = 1.0;
    double psum = 0.0, qsum = 0.0;
    // a_k = prod_{j=1..k} (mu - (2j-1)^2); even k -> P, odd k -> Q.
    double ak = 1.0;
    double denom = 1.0;
    for (int k = 0; k <= 36; ++k) {
        const double term = ak / denom * pk;
        if (k % 4 == 0) psum += term;
        else if (k % 4 == 1) qsum += term;
        else if (k % 4 == 2) psum -= term;
        else qsum -= term;
        const double odd = 2.0 * k + 1.0;
        ak *= (mu - odd * odd);
        denom *= (k + 1.0);
        pk *= inv8x;
        if (std::fabs(ak / denom * pk) < 1e-17) {
            // flush the final partial term into the right slot
            const double last = ak / denom * pk;
            const int kk = k + 1;
            if (kk % 4 == 0) psum += last;
            else if (kk % 4 == 1) qsum += last;
            else if (kk % 4 == 2) psum -= last;
            else qsum -= last;
            break;
        }
    }
    *p = psum;
    *q = qsum;
}

double bessel_j_series(int n, double x) {
    // J_n(x) = (x/2)^n / n! * sum_k (-(x/2)^2)^k / (k! (n+1)...(n+k))
    const double half = 0.5 * x;
    double prefix = 1.0;
    for (int j = 1; j <= n; ++j) prefix *= half / j;
    const double msq = -half * half;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 60; ++k) {
        term *= msq / (k * (n + k));
        sum += term;
        if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
    }
    return prefix * sum;
}

double bessel_j_large(int n, double x) {
    double p, q;
    hankel_pq(n, x, &p, &q);
    const double chi = x - (2 * n + 1) * (M_PI / 4.0);
    return std::sqrt(2.0 / (M_PI * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

constexpr double kSeriesAsymptoticSplit = 12.0;

}  // namespace

double exp_integral_e1(double x) {
    if (!(x > 0.0)) throw std::domain_error("exp_integral_e1: requires x > 0");
    return x <= 1.0 ? e1_series(x) : e1_continued_fraction(x);
}

double bessel_j0(double x) {
    x = std::fabs(x);
    return x < kSeriesAsymptoticSplit ? bessel_j_series(0, x) : bessel_j_large(0, x);
}

double bessel_j1(double x) {
    const double ax = std::fabs(x);
    const double v = ax < kSeriesAsymptoticSplit ? bessel_j_series(1, ax) : bessel_j_large(1, ax);
    return x < 0.0 ? -v : v;
}

double bessel_j2(double x) {
    const double ax = std::fabs(x);
    if (ax < 1e-4) return bessel_j_series(2, ax);
    return 2.0 * bessel_j1(ax) / ax - bessel_j0(ax);
}

double bessel_j(int n, double x) {
    switch (n) {
        case 0: return bessel_j0(x);
        case 1: return bessel_j1(x);
        case 2: return bessel_j2(x);
        default: throw std::invalid_argument("bessel_j: order must be 0, 1 or 2");
    }
}

}  // namespace flowlab
