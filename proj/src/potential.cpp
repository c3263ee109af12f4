#include "flowlab/potential.hpp"

#include <cmath>

#include "flowlab/special_functions.hpp"

namespace flowlab {

namespace {
const double kSeam = std::exp(-2.0);
const double kValueAtSeam = exp_integral_e1(2.0);
}  // namespace

double RadialProfile::value(double r) {
    if (r <= 1e-300) return 0.0;
    if (r <= kSeam) return exp_integral_e1(-std::log(r));
    return kValueAtSeam + 0.5 * (r - kSeam);
}

double RadialProfile::slope(double r) {
    if (r <= 0.0) return 0.0;
    if (r >= kSeam) return 0.5;
    return 1.0 / (-std::log(r));
}

double RadialProfile::seam() { return kSeam; }

Potential Potential::pathological(double a, double eps) {
    Potential p;
    p.kind_ = PotentialKind::Pathological;
    p.a_ = a;
    p.eps_ = eps;
    return p;
}

Potential Potential::quadratic(double lambda1, double lambda2) {
    Potential p;
    p.kind_ = PotentialKind::Quadratic;
    p.lambda_ = {lambda1, lambda2};
    return p;
}

double Potential::value(const Vec2& x) const {
    if (kind_ == PotentialKind::Quadratic) {
        return 0.5 * (lambda_[0] * x[0] * x[0] + lambda_[1] * x[1] * x[1]);
    }
    const double r = std::hypot(x[0], x[1]);
    double v = RadialProfile::value(r);
    const double u = x[0] - a_;
    if (u > 0.0) v += 0.5 * eps_ * u * u;
    return v;
}

Vec2 Potential::gradient(const Vec2& x) const {
    if (kind_ == PotentialKind::Quadratic) {
        return {lambda_[0] * x[0], lambda_[1] * x[1]};
    }
    const double r = std::hypot(x[0], x[1]);
    Vec2 g = {0.0, 0.0};
    if (r > 0.0) {
        const double s = RadialProfile::slope(r) / r;
        g[0] = s * x[0];
        g[1] = s * x[1];
    }
    const double u = x[0] - a_;
    if (u > 0.0) g[0] += eps_ * u;
    return g;
}

std::string Potential::name() const {
    return kind_ == PotentialKind::Quadratic ? "quadratic" : "pathological";
}

}  // namespace flowlab
