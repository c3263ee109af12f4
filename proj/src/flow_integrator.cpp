#include "flowlab/flow_integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "flowlab/potential.hpp"
#include "flowlab/radial_envelope.hpp"

namespace flowlab {

namespace {

// ---------------------------------------------------------------------------
// Dormand-Prince 8(5,3) coefficients (Hairer/Norsett/Wanner DOP853 tableau).
// ---------------------------------------------------------------------------
constexpr double c2 = 0.05260015195876773187856;
constexpr double c3 = 0.07890022793815159781784;
constexpr double c4 = 0.11835034190722739672676;
constexpr double c5 = 0.28164965809277260327324;
constexpr double c6 = 1.0 / 3.0;
constexpr double c7 = 0.25;
constexpr double c8 = 0.30769230769230769230769;
constexpr double c9 = 0.65128205128205128205128;
constexpr double c10 = 0.6;
constexpr double c11 = 0.85714285714285714285714;

constexpr double a21 = c2;
constexpr double a31 = 0.01972505698453789945446;
constexpr double a32 = 0.05917517095361369836338;
constexpr double a41 = 0.02958758547680684918169;
constexpr double a43 = 0.08876275643042054754507;
constexpr double a51 = 0.24136513415926668550237;
constexpr double a53 = -0.88454947932828608534486;
constexpr double a54 = 0.92483400326179200311574;
constexpr double a61 = 0.03703703703703703703704;
constexpr double a64 = 0.17082860872947387127960;
constexpr double a65 = 0.12546768756682242501669;
constexpr double a71 = 0.037109375;
constexpr double a74 = 0.17025221101954403931498;
constexpr double a75 = 0.06021653898045596068502;
constexpr double a76 = -0.017578125;
constexpr double a81 = 0.03709200011850479271088;
constexpr double a84 = 0.17038392571223999381021;
constexpr double a85 = 0.10726203044637328465181;
constexpr double a86 = -0.01531943774862440175279;
constexpr double a87 = 0.00827378916381402288758;
constexpr double a91 = 0.62411095871607571711443;
constexpr double a94 = -3.36089262944694129406857;
constexpr double a95 = -0.86821934684172600681819;
constexpr double a96 = 27.5920996994467083049416;
constexpr double a97 = 20.1540675504778934086187;
constexpr double a98 = -43.4898841810699588477366;
constexpr double a101 = 0.47766253643826436589043;
constexpr double a104 = -2.48811461997166764192642;
constexpr double a105 = -0.59029082683684299637145;
constexpr double a106 = 21.2300514481811942347289;
constexpr double a107 = 15.2792336328824235832597;
constexpr double a108 = -33.2882109689848629194453;
constexpr double a109 = -0.02033120170850862613582;
constexpr double a111 = -0.93714243008598732571704;
constexpr double a114 = 5.18637242884406370830024;
constexpr double a115 = 1.09143734899672957818500;
constexpr double a116 = -8.14978701074692612513997;
constexpr double a117 = -18.5200656599969598641566;
constexpr double a118 = 22.7394870993505042818970;
constexpr double a119 = 2.49360555267965238987089;
constexpr double a1110 = -3.04676447189821950038237;
constexpr double a121 = 2.27331014751653820792360;
constexpr double a124 = -10.5344954667372501984067;
constexpr double a125 = -2.00087205822486249909676;
constexpr double a126 = -17.9589318631187989172766;
constexpr double a127 = 27.9488845294199600508500;
constexpr double a128 = -2.85899827713502369474066;
constexpr double a129 = -8.87285693353062954433549;
constexpr double a1210 = 12.3605671757943030647266;
constexpr double a1211 = 0.64339274601576353035597;

constexpr double b1 = 0.05429373411656876223805;
constexpr double b6 = 4.45031289275240888144114;
constexpr double b7 = 1.89151789931450038304282;
constexpr double b8 = -5.80120396001058478146721;
constexpr double b9 = 0.31116436695781989440892;
constexpr double b10 = -0.15216094966251607855618;
constexpr double b11 = 0.20136540080403034837478;
constexpr double b12 = 0.04471061572777259051769;

constexpr double bhh1 = 0.24409448818897637795276;
constexpr double bhh2 = 0.73384668828161185734136;
constexpr double bhh3 = 0.02205882352941176470588;

constexpr double er1 = 0.01312004499419488073250;
constexpr double er6 = -1.22515644637620444072057;
constexpr double er7 = -0.49575894965725019152141;
constexpr double er8 = 1.66437718245498653696153;
constexpr double er9 = -0.35032884874997368168865;
constexpr double er10 = 0.33417911871301747902973;
constexpr double er11 = 0.08192320648511571246571;
constexpr double er12 = -0.02235530786388629525884;

constexpr double kStepSafety = 0.9;
constexpr double kStepShrinkMin = 0.2;
constexpr double kStepGrowMax = 6.0;
constexpr double kOrderExponent = 0.125;  // 1/8 for the order-8 pair

// Generic adaptive driver. Rhs: void(t, const double* y, double* dy).
// Valid: bool(const double* y) rejects steps leaving the admissible set.
// OnAccept: void(t_old, y_old, f_old, t_new, y_new, f_new) after every
// accepted step. StopHook: called exactly when a requested stop time is
// reached (steps are clamped to land on stop times; no interpolation).
template <int N, class Rhs, class Valid, class OnAccept>
IntegrationError drive(Rhs&& rhs, Valid&& valid, double t, double t_end,
                       std::array<double, N>& y, int nctrl, const IntegratorConfig& cfg,
                       double h_start, std::int64_t* accepted, std::int64_t* rejected,
                       const std::vector<double>& stops, std::size_t* stop_cursor,
                       OnAccept&& on_accept) {
    std::array<double, N> k1, k2, k3, k4, k5, k6, k7, k8, k9, k10, k11, k12, ks;
    std::array<double, N> yt, ynew, fnew;

    rhs(t, y.data(), k1.data());
    double h = h_start;
    bool nonfinite_seen = false;

    while (t < t_end) {
        if (*accepted + *rejected >= cfg.max_steps) return IntegrationError::HorizonNotReached;

        double target = t_end;
        while (*stop_cursor < stops.size() && stops[*stop_cursor] <= t * (1.0 + 1e-15)) {
            ++*stop_cursor;
        }
        if (*stop_cursor < stops.size()) target = std::min(target, stops[*stop_cursor]);

        bool clipped = false;
        if (h > target - t) {
            h = target - t;
            clipped = true;
        }

        const double* yp = y.data();
        auto stage = [&](double tc, std::array<double, N>& kk) { rhs(tc, yt.data(), kk.data()); };

        for (int i = 0; i < N; ++i) yt[i] = yp[i] + h * a21 * k1[i];
        stage(t + c2 * h, k2);
        for (int i = 0; i < N; ++i) yt[i] = yp[i] + h * (a31 * k1[i] + a32 * k2[i]);
        stage(t + c3 * h, k3);
        for (int i = 0; i < N; ++i) yt[i] = yp[i] + h * (a41 * k1[i] + a43 * k3[i]);
        stage(t + c4 * h, k4);
        for (int i = 0; i < N; ++i) yt[i] = yp[i] + h * (a51 * k1[i] + a53 * k3[i] + a54 * k4[i]);
        stage(t + c5 * h, k5);
        for (int i = 0; i < N; ++i) yt[i] = yp[i] + h * (a61 * k1[i] + a64 * k4[i] + a65 * k5[i]);
        stage(t + c6 * h, k6);
        for (int i = 0; i < N; ++i)
            yt[i] = yp[i] + h * (a71 * k1[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        stage(t + c7 * h, k7);
        for (int i = 0; i < N; ++i)
            yt[i] = yp[i] + h * (a81 * k1[i] + a84 * k4[i] + a85 * k5[i] + a86 * k6[i] + a87 * k7[i]);
        stage(t + c8 * h, k8);
        for (int i = 0; i < N; ++i)
            yt[i] = yp[i] + h * (a91 * k1[i] + a94 * k4[i] + a95 * k5[i] + a96 * k6[i] +
                                 a97 * k7[i] + a98 * k8[i]);
        stage(t + c9 * h, k9);
        for (int i = 0; i < N; ++i)
            yt[i] = yp[i] + h * (a101 * k1[i] + a104 * k4[i] + a105 * k5[i] + a106 * k6[i] +
                                 a107 * k7[i] + a108 * k8[i] + a109 * k9[i]);
        stage(t + c10 * h, k10);
        for (int i = 0; i < N; ++i)
            yt[i] = yp[i] + h * (a111 * k1[i] + a114 * k4[i] + a115 * k5[i] + a116 * k6[i] +
                                 a117 * k7[i] + a118 * k8[i] + a119 * k9[i] + a1110 * k10[i]);
        stage(t + c11 * h, k11);
        for (int i = 0; i < N; ++i)
            yt[i] = yp[i] + h * (a121 * k1[i] + a124 * k4[i] + a125 * k5[i] + a126 * k6[i] +
                                 a127 * k7[i] + a128 * k8[i] + a129 * k9[i] + a1210 * k10[i] +
                                 a1211 * k11[i]);
        stage(t + h, k12);

        for (int i = 0; i < N; ++i) {
            ks[i] = b1 * k1[i] + b6 * k6[i] + b7 * k7[i] + b8 * k8[i] + b9 * k9[i] +
                    b10 * k10[i] + b11 * k11[i] + b12 * k12[i];
            ynew[i] = yp[i] + h * ks[i];
        }

        double err5 = 0.0, err3 = 0.0;
        for (int i = 0; i < nctrl; ++i) {
            const double sk =
                cfg.abs_tol + cfg.rel_tol * std::max(std::fabs(yp[i]), std::fabs(ynew[i]));
            const double e3 = (ks[i] - bhh1 * k1[i] - bhh2 * k9[i] - bhh3 * k12[i]) / sk;
            const double e5 = (er1 * k1[i] + er6 * k6[i] + er7 * k7[i] + er8 * k8[i] +
                               er9 * k9[i] + er10 * k10[i] + er11 * k11[i] + er12 * k12[i]) / sk;
            err5 += e5 * e5;
            err3 += e3 * e3;
        }
        const double denom = err5 + 0.01 * err3;
        double err = denom > 0.0 ? std::fabs(h) * err5 / std::sqrt(nctrl * denom) : 0.0;

        bool finite = std::isfinite(err);
        for (int i = 0; finite && i < N; ++i) finite = std::isfinite(ynew[i]);
        if (!finite || !valid(ynew.data())) {
            ++*rejected;
            nonfinite_seen = !finite;
            h *= 0.25;
            if (h < 1e-14 * std::max(1.0, std::fabs(t)))
                return nonfinite_seen ? IntegrationError::NonFinite
                                      : IntegrationError::StepUnderflow;
            continue;
        }

        if (err <= 1.0) {
            rhs(t + h, ynew.data(), fnew.data());
            ++*accepted;
            const double t_old = t;
            t += h;
            on_accept(t_old, y, k1, t, ynew, fnew);
            y = ynew;
            k1 = fnew;
            const double fac = err > 0.0
                                   ? std::min(kStepGrowMax,
                                              std::max(kStepShrinkMin,
                                                       kStepSafety * std::pow(err, -kOrderExponent)))
                                   : kStepGrowMax;
            const double h_next = h * fac;
            // A step clipped to land on a stop time must not poison the
            // controller's memory: resume from the unclipped scale.
            h = clipped ? std::max(h_next, std::min(h / std::max(fac, 1e-300), h_next) * fac) : h_next;
            if (clipped) h = h_next > h ? h_next : h;
        } else {
            ++*rejected;
            nonfinite_seen = false;
            h *= std::max(kStepShrinkMin, kStepSafety * std::pow(err, -kOrderExponent));
            if (h < 1e-14 * std::max(1.0, std::fabs(t))) return IntegrationError::StepUnderflow;
        }
    }
    return IntegrationError::None;
}

// Cubic Hermite interpolation of one state component on an accepted step.
double hermite(double theta, double h, double y0, double f0, double y1, double f1) {
    const double u = theta;
    const double v = 1.0 - u;
    return v * y0 + u * y1 + u * v * ((1.0 - 2.0 * u) * (y1 - y0) + h * (v * f0 - u * f1));
}

// Sample-time grid: t0, all 10^(j/n) in (t0, t_end), and t_end.
std::vector<double> sample_grid(double t0, double t_end, int per_decade) {
    std::vector<double> g;
    g.push_back(t0);
    const double lo = std::max(t0, 1e-300);
    long j = static_cast<long>(std::ceil(per_decade * std::log10(lo) - 1e-9));
    for (;; ++j) {
        const double t = std::pow(10.0, static_cast<double>(j) / per_decade);
        if (t <= t0 * (1.0 + 1e-14)) continue;
        if (t >= t_end * (1.0 - 1e-14)) break;
        g.push_back(t);
    }
    g.push_back(t_end);
    return g;
}

struct CartesianRhs {
    const Potential* pot;
    bool pathological;
    double a, eps;

    // y = [x1, x2, v1, v2, arc, torque, wf, wv2]
    void operator()(double t, const double* y, double* dy) const {
        const Vec2 x = {y[0], y[1]};
        const Vec2 g = pot->gradient(x);
        const double inv_t = 3.0 / t;
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = -inv_t * y[2] - g[0];
        dy[3] = -inv_t * y[3] - g[1];
        const double speed2 = y[2] * y[2] + y[3] * y[3];
        dy[4] = std::sqrt(speed2);
        if (pathological) {
            const double u = y[0] - a;
            dy[5] = u > 0.0 ? eps * t * t * t * y[1] * u : 0.0;
        } else {
            dy[5] = 0.0;
        }
        dy[6] = t * pot->value(x);
        dy[7] = t * speed2;
    }
};

struct GradientRhs {
    const Potential* pot;
    double a, eps;
    bool pathological;

    // y = [x1, x2, arc, torque, wf, wv2]
    void operator()(double t, const double* y, double* dy) const {
        const Vec2 x = {y[0], y[1]};
        const Vec2 g = pot->gradient(x);
        dy[0] = -g[0];
        dy[1] = -g[1];
        const double speed2 = g[0] * g[0] + g[1] * g[1];
        dy[2] = std::sqrt(speed2);
        if (pathological) {
            const double u = y[0] - a;
            dy[3] = u > 0.0 ? eps * t * t * t * y[1] * u : 0.0;
        } else {
            dy[3] = 0.0;
        }
        dy[4] = t * pot->value(x);
        dy[5] = t * speed2;
    }
};

struct PolarZRhs {
    double kappa;

    // y = [z, p, theta, arc, wf, wv2] with z = t^{3/2} r, p = ż.
    // The damping-free form of the polar reduction: z̈ = (3/4) z/t²
    // − t^{3/2} F'(z t^{-3/2}) + κ²/z³. Magnitudes stay O(1) for the
    // whole horizon, so the absolute-tolerance floor never bites the
    // shrinking radius the way it does in (r, ṙ) variables.
    void operator()(double t, const double* y, double* dy) const {
        const double z = y[0];
        const double st = t * std::sqrt(t);
        const double r = z / st;
        dy[0] = y[1];
        dy[1] = 0.75 * z / (t * t) - st * RadialProfile::slope(r) + kappa * kappa / (z * z * z);
        dy[2] = kappa / (z * z);  // θ̇ = κ/(t³ r²) = κ/z²
        const double rdot = (y[1] - 1.5 * z / t) / st;
        const double w = kappa / (st * z);  // tangential speed κ/(t³ r)
        const double speed2 = rdot * rdot + w * w;
        dy[3] = std::sqrt(speed2);
        dy[4] = t * RadialProfile::value(r);
        dy[5] = t * speed2;
    }
};

Sample cartesian_sample(const Potential& pot, double t, const std::array<double, 8>& y) {
    Sample s;
    s.t = t;
    s.x1 = y[0];
    s.x2 = y[1];
    s.v1 = y[2];
    s.v2 = y[3];
    s.f = pot.value({y[0], y[1]});
    s.arc = y[4];
    s.torque = y[5];
    s.wf = y[6];
    s.wv2 = y[7];
    return s;
}

double radius_of(const std::array<double, 8>& y) { return std::hypot(y[0], y[1]); }

// Locates a sign change of (interpolated radius - level) inside one
// accepted step by bisection on the cubic Hermite interpolant.
template <int N>
double locate_radius_crossing(double t0, const std::array<double, N>& y0,
                              const std::array<double, N>& f0, double t1,
                              const std::array<double, N>& y1, const std::array<double, N>& f1,
                              double level) {
    const double h = t1 - t0;
    auto radius_at = [&](double theta) {
        const double x1 = hermite(theta, h, y0[0], f0[0], y1[0], f1[0]);
        const double x2 = hermite(theta, h, y0[1], f0[1], y1[1], f1[1]);
        return std::hypot(x1, x2) - level;
    };
    double lo = 0.0, hi = 1.0;
    double flo = radius_at(lo);
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = radius_at(mid);
        if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if ((hi - lo) * h < 1e-16 * std::max(1.0, t0)) break;
    }
    return t0 + 0.5 * (lo + hi) * h;
}

}  // namespace

std::string to_string(IntegrationError e) {
    switch (e) {
        case IntegrationError::None: return "none";
        case IntegrationError::StepUnderflow: return "StepUnderflow";
        case IntegrationError::NonFinite: return "NonFinite";
        case IntegrationError::HorizonNotReached: return "HorizonNotReached";
        case IntegrationError::RadiusCollapse: return "RadiusCollapse";
    }
    return "unknown";
}

std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::RadialEntry: return "RadialEntry";
        case EventKind::RadialExit: return "RadialExit";
        case EventKind::SeamCrossing: return "SeamCrossing";
        case EventKind::MinimizerReached: return "MinimizerReached";
    }
    return "unknown";
}

Sample small_time_expansion(const Potential& pot, const Vec2& x0, double t0) {
    const Vec2 g = pot.gradient(x0);
    const double gnorm2 = g[0] * g[0] + g[1] * g[1];
    Sample s;
    s.t = t0;
    s.x1 = x0[0] - t0 * t0 * g[0] / 8.0;
    s.x2 = x0[1] - t0 * t0 * g[1] / 8.0;
    s.v1 = -t0 * g[0] / 4.0;
    s.v2 = -t0 * g[1] / 4.0;
    s.f = pot.value({s.x1, s.x2});
    s.arc = t0 * t0 * std::sqrt(gnorm2) / 8.0;
    if (pot.kind() == PotentialKind::Pathological) {
        const double u = x0[0] - pot.a();
        s.torque = u > 0.0 ? pot.eps() * x0[1] * u * std::pow(t0, 4) / 4.0 : 0.0;
    }
    s.wf = t0 * t0 * pot.value(x0) / 2.0;
    s.wv2 = std::pow(t0, 4) * gnorm2 / 64.0;
    return s;
}

Trajectory integrate_nesterov(const Potential& pot, const Vec2& x0, const IntegratorConfig& cfg) {
    Trajectory traj;
    const Sample init = small_time_expansion(pot, x0, cfg.t0);
    traj.samples.push_back(init);

    std::array<double, 8> y = {init.x1, init.x2, init.v1, init.v2,
                               init.arc, init.torque, init.wf, init.wv2};

    CartesianRhs rhs{&pot, pot.kind() == PotentialKind::Pathological, pot.a(), pot.eps()};
    const std::vector<double> stops = sample_grid(cfg.t0, cfg.t_end, cfg.samples_per_decade);
    std::size_t cursor = 1;  // stops[0] == t0, already emitted

    const double seam = RadialProfile::seam();
    const bool track_events = pot.kind() == PotentialKind::Pathological;
    const double a_level = pot.a();

    double t = cfg.t0;
    auto on_accept = [&](double t_old, const std::array<double, 8>& y_old,
                         const std::array<double, 8>& f_old, double t_new,
                         const std::array<double, 8>& y_new, const std::array<double, 8>& f_new) {
        if (track_events) {
            const double r0 = radius_of(y_old), r1 = radius_of(y_new);
            if ((r0 - a_level) * (r1 - a_level) < 0.0) {
                const double tc =
                    locate_radius_crossing(t_old, y_old, f_old, t_new, y_new, f_new, a_level);
                traj.events.push_back(
                    {r1 < a_level ? EventKind::RadialEntry : EventKind::RadialExit, tc});
            }
            if ((r0 - seam) * (r1 - seam) < 0.0) {
                const double tc =
                    locate_radius_crossing(t_old, y_old, f_old, t_new, y_new, f_new, seam);
                traj.events.push_back({EventKind::SeamCrossing, tc});
            }
        }
        if (cursor < stops.size() && t_new >= stops[cursor] * (1.0 - 1e-15)) {
            traj.samples.push_back(cartesian_sample(pot, stops[cursor], y_new));
        }
    };

    traj.error = drive<8>(rhs, [](const double*) { return true; }, t, cfg.t_end, y,
                          8, cfg, cfg.h_init, &traj.steps_accepted, &traj.steps_rejected,
                          stops, &cursor, on_accept);
    traj.t_reached = traj.error == IntegrationError::None ? cfg.t_end : t;
    if (traj.error == IntegrationError::None) traj.t_reached = cfg.t_end;
    return traj;
}

Trajectory integrate_gradient_flow(const Potential& pot, const Vec2& x0,
                                   const IntegratorConfig& cfg) {
    Trajectory traj;
    Sample init;
    init.t = cfg.t0;
    init.x1 = x0[0];
    init.x2 = x0[1];
    const Vec2 g0 = pot.gradient(x0);
    init.v1 = -g0[0];
    init.v2 = -g0[1];
    init.f = pot.value(x0);
    traj.samples.push_back(init);

    std::array<double, 6> y = {x0[0], x0[1], 0.0, 0.0, 0.0, 0.0};
    GradientRhs rhs{&pot, pot.a(), pot.eps(), pot.kind() == PotentialKind::Pathological};

    const std::vector<double> stops = sample_grid(std::max(cfg.t0, 1e-6), cfg.t_end,
                                                  cfg.samples_per_decade);
    std::size_t cursor = 0;
    if (!stops.empty() && stops[0] <= cfg.t0 * (1.0 + 1e-15)) cursor = 1;

    bool stopped = false;
    auto make_sample = [&](double t, const std::array<double, 6>& s) {
        Sample out;
        out.t = t;
        out.x1 = s[0];
        out.x2 = s[1];
        const Vec2 g = pot.gradient({s[0], s[1]});
        out.v1 = -g[0];
        out.v2 = -g[1];
        out.f = pot.value({s[0], s[1]});
        out.arc = s[2];
        out.torque = s[3];
        out.wf = s[4];
        out.wv2 = s[5];
        return out;
    };

    auto on_accept = [&](double t_old, const std::array<double, 6>& y_old,
                         const std::array<double, 6>& f_old, double t_new,
                         const std::array<double, 6>& y_new, const std::array<double, 6>& f_new) {
        if (cursor < stops.size() && t_new >= stops[cursor] * (1.0 - 1e-15)) {
            traj.samples.push_back(make_sample(stops[cursor], y_new));
        }
        if (!stopped) {
            const double r1 = std::hypot(y_new[0], y_new[1]);
            if (r1 < cfg.stop_radius) {
                const double r0 = std::hypot(y_old[0], y_old[1]);
                double tc = t_new;
                if (r0 >= cfg.stop_radius) {
                    std::array<double, 6> yo = y_old, fo = f_old, yn = y_new, fn = f_new;
                    tc = locate_radius_crossing(t_old, yo, fo, t_new, yn, fn, cfg.stop_radius);
                }
                traj.events.push_back({EventKind::MinimizerReached, tc});
                stopped = true;
            }
        }
    };

    // The stop radius terminates the run via a shortened horizon: run in
    // segments, checking the flag between driver calls.
    double t = cfg.t0;
    std::size_t seg_end = cursor;
    traj.error = IntegrationError::None;
    double h = cfg.h_init;
    while (t < cfg.t_end && traj.error == IntegrationError::None && !stopped) {
        const double t_next = seg_end < stops.size() ? stops[seg_end] : cfg.t_end;
        std::size_t inner_cursor = cursor;
        traj.error = drive<6>(rhs, [](const double*) { return true; }, t, t_next, y, 6, cfg, h,
                              &traj.steps_accepted, &traj.steps_rejected, stops, &inner_cursor,
                              on_accept);
        cursor = inner_cursor;
        t = t_next;
        seg_end = cursor + 1;
        if (seg_end > stops.size()) break;
    }
    traj.t_reached = t;
    if (stopped && !traj.events.empty()) traj.t_reached = traj.events.back().t;
    return traj;
}

Trajectory integrate_polar_nesterov(double kappa, const Sample& handoff,
                                    const IntegratorConfig& cfg) {
    Trajectory traj;
    const double t_start = handoff.t;
    const double r0 = std::hypot(handoff.x1, handoff.x2);
    const double pr0 = (handoff.x1 * handoff.v1 + handoff.x2 * handoff.v2) / r0;
    const double theta0 = std::atan2(handoff.x2, handoff.x1);
    const double st0 = t_start * std::sqrt(t_start);

    std::array<double, 6> y = {st0 * r0, st0 * pr0 + 1.5 * std::sqrt(t_start) * r0,
                               theta0, handoff.arc, handoff.wf, handoff.wv2};
    const double torque_const = handoff.torque;

    PolarZRhs rhs{kappa};
    const std::vector<double> stops = sample_grid(t_start, cfg.t_end, cfg.samples_per_decade);
    std::size_t cursor = 1;

    bool collapsed = false;
    auto make_sample = [&](double t, const std::array<double, 6>& s) {
        const double st = t * std::sqrt(t);
        const double r = s[0] / st;
        const double rdot = (s[1] - 1.5 * s[0] / t) / st;
        const double w = kappa / (st * s[0]);
        const double ct = std::cos(s[2]), snt = std::sin(s[2]);
        Sample out;
        out.t = t;
        out.x1 = r * ct;
        out.x2 = r * snt;
        out.v1 = rdot * ct - w * snt;
        out.v2 = rdot * snt + w * ct;
        out.f = RadialProfile::value(r);
        out.arc = s[3];
        out.torque = torque_const;
        out.wf = s[4];
        out.wv2 = s[5];
        return out;
    };

    auto on_accept = [&](double, const std::array<double, 6>&, const std::array<double, 6>&,
                         double t_new, const std::array<double, 6>& y_new,
                         const std::array<double, 6>&) {
        if (cursor < stops.size() && t_new >= stops[cursor] * (1.0 - 1e-15)) {
            traj.samples.push_back(make_sample(stops[cursor], y_new));
        }
        const double st = t_new * std::sqrt(t_new);
        if (y_new[0] / st < 1e-14) collapsed = true;
    };

    auto valid = [](const double* s) { return s[0] > 0.0; };

    traj.samples.push_back(make_sample(t_start, y));
    traj.error = drive<6>(rhs, valid, t_start, cfg.t_end, y, 6, cfg, 1e-5,
                          &traj.steps_accepted, &traj.steps_rejected, stops, &cursor, on_accept);
    if (collapsed) traj.error = IntegrationError::RadiusCollapse;
    traj.t_reached = traj.error == IntegrationError::None ? cfg.t_end : traj.samples.back().t;
    return traj;
}

Trajectory integrate_nesterov_long_horizon(const Potential& pot, const Vec2& x0,
                                           const IntegratorConfig& cfg) {
    const bool use_polar = pot.kind() == PotentialKind::Pathological &&
                           cfg.t_end > cfg.polar_handoff && cfg.polar_handoff > cfg.t0;
    if (!use_polar) {
        Trajectory traj = integrate_nesterov(pot, x0, cfg);
        collect_orbit_from_samples(traj, cfg.orbit_arc_step);
        return traj;
    }

    IntegratorConfig cart_cfg = cfg;
    cart_cfg.t_end = cfg.polar_handoff;
    Trajectory traj = integrate_nesterov(pot, x0, cart_cfg);
    traj.t_polar_start = cfg.polar_handoff;
    if (!traj.ok()) return traj;

    // κ = mean of t³ det(X, V) over the last Cartesian decade; std of the
    // same samples is the estimator quality metric.
    {
        double sum = 0.0, count = 0.0;
        const double lo = cfg.polar_handoff / 10.0;
        for (const Sample& s : traj.samples) {
            if (s.t < lo * (1.0 - 1e-12)) continue;
            sum += s.t * s.t * s.t * (s.x1 * s.v2 - s.x2 * s.v1);
            count += 1.0;
        }
        const double mean = sum / count;
        double var = 0.0;
        for (const Sample& s : traj.samples) {
            if (s.t < lo * (1.0 - 1e-12)) continue;
            const double d = s.t * s.t * s.t * (s.x1 * s.v2 - s.x2 * s.v1) - mean;
            var += d * d;
        }
        traj.kappa = mean;
        traj.kappa_std = std::sqrt(var / count);
    }
    for (const Event& e : traj.events) {
        if (e.kind == EventKind::RadialExit) traj.t_rad = e.t;
    }

    const double t_avg = std::min(cfg.t_end, std::max(cfg.averaged_handoff, cfg.polar_handoff));
    IntegratorConfig polar_cfg = cfg;
    polar_cfg.t_end = t_avg;
    Trajectory polar = integrate_polar_nesterov(traj.kappa, traj.samples.back(), polar_cfg);
    traj.steps_accepted += polar.steps_accepted;
    traj.steps_rejected += polar.steps_rejected;
    // polar.samples[0] duplicates the handoff sample.
    traj.samples.insert(traj.samples.end(), polar.samples.begin() + 1, polar.samples.end());
    if (!polar.ok()) {
        traj.error = polar.error;
        traj.t_reached = polar.t_reached;
        collect_orbit_from_samples(traj, cfg.orbit_arc_step);
        return traj;
    }

    if (t_avg < cfg.t_end) {
        traj.t_averaged_start = t_avg;
        RadialEnvelope env(traj.kappa);
        // Rebuild the z-form state from the last polar sample.
        const Sample& hs = traj.samples.back();
        const double st = hs.t * std::sqrt(hs.t);
        const double r = std::hypot(hs.x1, hs.x2);
        const double pr = (hs.x1 * hs.v1 + hs.x2 * hs.v2) / r;
        RadialEnvelope::HandoffZ hz;
        hz.t = hs.t;
        hz.z = st * r;
        hz.p = st * pr + 1.5 * std::sqrt(hs.t) * r;
        hz.theta = std::atan2(hs.x2, hs.x1);
        hz.arc = hs.arc;
        hz.torque = hs.torque;
        hz.wf = hs.wf;
        hz.wv2 = hs.wv2;

        std::vector<double> times = sample_grid(hs.t, cfg.t_end, cfg.samples_per_decade);
        std::vector<Sample> avg_samples;
        env.continue_averaged(hz, times, cfg.orbit_arc_step, &avg_samples, nullptr);
        traj.samples.insert(traj.samples.end(), avg_samples.begin() + 1, avg_samples.end());
    }
    traj.t_reached = cfg.t_end;
    collect_orbit_from_samples(traj, cfg.orbit_arc_step);
    return traj;
}

}  // namespace flowlab
