#pragma once

#include <array>
#include <string>

namespace flowlab {

using Vec2 = std::array<double, 2>;

// Radial profile of the rotationally symmetric part:
//   F(r) = E1(-log r)                     for 0 < r <= e^{-2},
//   F(r) = E1(2) + (r - e^{-2})/2         for r  >  e^{-2},
// extended by F(0) = 0. C^1 everywhere on [0, inf): F'(r) = 1/(-log r)
// inside, 1/2 outside, both equal 1/2 at the seam r = e^{-2}.
struct RadialProfile {
    static double value(double r);
    static double slope(double r);
    // Inner branch boundary e^{-2}.
    static double seam();
};

enum class PotentialKind { Pathological, Quadratic };

// Planar convex C^1 test potentials.
//
// Pathological: f(x) = F(|x|) + eps * psi_a(x1) with the one-sided
// quadratic psi_a(u) = (u - a)_+^2 / 2. Gradient flow reaches the
// minimizer in finite time; the accelerated flow spirals forever.
//
// Quadratic: f(x) = (lambda1 x1^2 + lambda2 x2^2)/2, the closed-form
// benchmark family.
class Potential {
  public:
    static Potential pathological(double a, double eps);
    static Potential quadratic(double lambda1, double lambda2);

    double value(const Vec2& x) const;
    Vec2 gradient(const Vec2& x) const;

    PotentialKind kind() const { return kind_; }
    double a() const { return a_; }
    double eps() const { return eps_; }
    const std::array<double, 2>& lambda() const { return lambda_; }
    std::string name() const;

  private:
    PotentialKind kind_ = PotentialKind::Pathological;
    double a_ = 0.02;
    double eps_ = 50.0;
    std::array<double, 2> lambda_ = {1.0, 1.0};
};

}  // namespace flowlab
