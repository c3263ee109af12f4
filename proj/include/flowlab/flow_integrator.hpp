#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "flowlab/potential.hpp"

namespace flowlab {

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double t0 = 1e-6;
    double t_end = 1e5;
    double h_init = 1e-8;
    std::int64_t max_steps = 2'000'000'000;

    // Gradient flow stops (MinimizerReached) once |X| drops below this.
    double stop_radius = 1e-12;

    // Sample schedule: log-uniform grid t = 10^(j/samples_per_decade),
    // plus t0 and t_end themselves.
    int samples_per_decade = 400;

    // Long-horizon strategy for the pathological potential: Cartesian
    // integration up to polar_handoff, the conserved-momentum polar
    // reduction up to averaged_handoff, and the adiabatic envelope
    // continuation beyond. Either handoff above t_end simply disables
    // the later legs.
    double polar_handoff = 1e2;
    double averaged_handoff = 1e3;

    // Spacing (in accumulated path length) of the orbit table.
    double orbit_arc_step = 1e-4;
};

enum class IntegrationError {
    None,
    StepUnderflow,      // step size fell below 1e-14 * max(1, t)
    NonFinite,          // NaN/Inf appeared in the state
    HorizonNotReached,  // max_steps exhausted before t_end
    RadiusCollapse,     // polar leg radius fell below 1e-14
};

std::string to_string(IntegrationError e);

enum class EventKind { RadialEntry, RadialExit, SeamCrossing, MinimizerReached };

std::string to_string(EventKind k);

struct Event {
    EventKind kind;
    double t;
};

// One row of the sample schedule. v is the state velocity (for gradient
// flow, -grad f). The four accumulators are integrated inside the RK
// state so they share the adaptive error control:
//   arc    = ∫ |V| ds                 (path length from t0)
//   torque = eps * ∫ s^3 X2 (X1-a)+ ds
//   wf     = ∫ s f(X) ds
//   wv2    = ∫ s |V|^2 ds
struct Sample {
    double t = 0;
    double x1 = 0, x2 = 0;
    double v1 = 0, v2 = 0;
    double f = 0;
    double arc = 0;
    double torque = 0;
    double wf = 0;
    double wv2 = 0;
};

struct Trajectory {
    std::vector<Sample> samples;
    std::vector<Event> events;
    IntegrationError error = IntegrationError::None;
    double t_reached = 0;
    std::int64_t steps_accepted = 0;
    std::int64_t steps_rejected = 0;

    // Filled by the long-horizon driver.
    double t_polar_start = std::numeric_limits<double>::quiet_NaN();
    double t_averaged_start = std::numeric_limits<double>::quiet_NaN();
    double kappa = 0;       // mean of t^3 det(X,V) over the last Cartesian decade
    double kappa_std = 0;   // std of those samples (estimator quality)
    double t_rad = std::numeric_limits<double>::quiet_NaN();  // last RadialExit

    // Arc-uniform Cartesian samples for orbit rendering.
    std::vector<Vec2> orbit;

    bool ok() const { return error == IntegrationError::None; }
};

// Series expansion of the accelerated flow about t=0 (where the 3/t
// friction term precludes starting the integrator directly):
//   X(t0) = X0 - (t0^2/8) g,  V(t0) = -(t0/4) g,  g = grad f(X0),
// with matching leading-order values for the four accumulators.
Sample small_time_expansion(const Potential& pot, const Vec2& x0, double t0);

// Accelerated flow  Ẍ + (3/t)Ẋ + grad f(X) = 0  in Cartesian
// coordinates from small_time_expansion(t0) to t_end.
Trajectory integrate_nesterov(const Potential& pot, const Vec2& x0, const IntegratorConfig& cfg);

// Gradient flow Ẋ = -grad f(X) from X0 at t = cfg.t0 (t0 = 0 allowed).
// Stops early with MinimizerReached when |X| < cfg.stop_radius.
Trajectory integrate_gradient_flow(const Potential& pot, const Vec2& x0,
                                   const IntegratorConfig& cfg);

// Conserved-momentum reduction of the accelerated flow inside the
// radial region:  r̈ + (3/t) ṙ + F'(r) = κ²/(t⁶ r³),  θ̇ = κ/(t³ r²).
// Integrated in the damping-free variables z = t^{3/2} r, p = ż, which
// keep every component O(1) across the full horizon. The handoff sample
// provides (t, X, V) and accumulator values; Cartesian samples are
// reconstructed as (r cos θ, r sin θ).
Trajectory integrate_polar_nesterov(double kappa, const Sample& handoff,
                                    const IntegratorConfig& cfg);

// Composite driver for pathological-potential accelerated runs:
// Cartesian to polar_handoff, polar reduction to averaged_handoff,
// adiabatic envelope continuation to t_end, merged into one trajectory
// with events, κ estimate and T_rad filled in.
Trajectory integrate_nesterov_long_horizon(const Potential& pot, const Vec2& x0,
                                           const IntegratorConfig& cfg);

}  // namespace flowlab
