#pragma once

#include <vector>

#include "flowlab/flow_integrator.hpp"

namespace flowlab {

// Averaged (adiabatic) continuation of the polar reduction.
//
// In the damping-free variables z = t^{3/2} r, p = ż the radial motion
// is a 1-D oscillation in the slowly deforming well
//   Phi(z; t) = t^3 F(z t^{-3/2}) + κ²/(2 z²) - (3/8) z²/t².
// The oscillation frequency ω grows ~ t^{1/2} while the well deforms on
// the scale of t itself, so the action I = (1/π)∮ p dz is an adiabatic
// invariant (verified against direct integration: I varies < 3e-4 over
// [1e2, 3e3] and period-averaged increments of arclength and the
// weighted integrals match direct integration to ~1e-5). Freezing I and
// averaging over the fast oscillation turns the remaining horizon into
// smooth 1-D quadratures, which is what makes t_end = 1e5 (≈2e9 radial
// periods) reachable.
class RadialEnvelope {
  public:
    RadialEnvelope(double kappa, int quadrature_points = 96);

    double effective_potential(double z, double t) const;   // Phi(z; t)
    double effective_slope(double z, double t) const;       // dPhi/dz
    double well_minimum(double t, double z_guess) const;    // argmin_z Phi

    struct Averages {
        double action = 0;       // (1/π) ∮ p dz
        double period = 0;       // radial oscillation period in t-units
        double omega = 0;        // 2π / period
        double mean_f = 0;       // <F(r)> over one oscillation
        double mean_speed = 0;   // <|Ẋ|>
        double mean_speed2 = 0;  // <|Ẋ|²>
        double mean_inv_z2 = 0;  // <1/z²> (drives θ̇ = κ/z²)
        double z_lo = 0, z_hi = 0;  // turning points
    };

    // Period averages at energy E in the frozen well Phi(.; t).
    // z_guess seeds the search for the well minimum.
    Averages averages(double E, double t, double z_guess) const;

    // Inverts action -> energy in the frozen well at time t by bisection.
    double energy_from_action(double action, double t, double z_guess,
                              double e_guess) const;

    // Continues a polar-leg handoff (z-form state + accumulators) to
    // t_end, emitting reconstructed samples at the given times and
    // appending arc-uniform orbit points. sample_times must be
    // increasing and start at the handoff time.
    struct HandoffZ {
        double t = 0;
        double z = 0, p = 0;
        double theta = 0;
        double arc = 0, torque = 0, wf = 0, wv2 = 0;
    };
    void continue_averaged(const HandoffZ& handoff, const std::vector<double>& sample_times,
                           double orbit_arc_step, std::vector<Sample>* samples,
                           std::vector<Vec2>* orbit) const;

    double kappa() const { return kappa_; }

  private:
    double kappa_;
    std::vector<double> nodes_;    // Gauss-Legendre nodes on [-1, 1]
    std::vector<double> weights_;
};

}  // namespace flowlab
