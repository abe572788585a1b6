#ifndef ICFRINGE_BIPHOTON_HPP
#define ICFRINGE_BIPHOTON_HPP

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "icfringe/errors.hpp"
#include "icfringe/optics.hpp"

namespace icfringe {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm_sq(const Vec2& v) { return v.x * v.x + v.y * v.y; }
inline double norm(const Vec2& v) { return std::sqrt(norm_sq(v)); }

// ---------------------------------------------------------------------------
// Joint transverse-momentum amplitude C(q_s, q_i)
// ---------------------------------------------------------------------------

enum class AmplitudeKind { correlated_gaussian, separable_gaussian, custom };

// The correlated kind encodes transverse phase matching q_s + q_i ~ 0 with a
// Gaussian pump envelope: C = exp(-w_p^2 |q_s + q_i|^2 / 4), peaking on the
// anti-correlation line q_s = -q_i. The separable kind factorizes as
// C_s(q_s) C_i(q_i) and carries no momentum correlation at all.
struct JointAmplitude {
    AmplitudeKind kind = AmplitudeKind::correlated_gaussian;
    double pump_waist = 0.0;   // correlated_gaussian
    double signal_width = 0.0; // separable_gaussian, momentum-space width
    double idler_width = 0.0;  // separable_gaussian, momentum-space width
    std::function<Complex(const Vec2&, const Vec2&)> evaluator;

    Complex evaluate(const Vec2& q_s, const Vec2& q_i) const { return evaluator(q_s, q_i); }

    // |C|^2 as used by the mode-projection quadrature.
    double density(const Vec2& q_s, const Vec2& q_i) const {
        return std::norm(evaluator(q_s, q_i));
    }

    // Both built-in kinds factorize |C|^2 over transverse axes.
    bool separable_axes() const { return kind != AmplitudeKind::custom; }

    // Per-axis |C|^2 factor (valid only when separable_axes()).
    double density_axis(double qs_a, double qi_a) const {
        if (kind == AmplitudeKind::correlated_gaussian) {
            const double s = qs_a + qi_a;
            return std::exp(-pump_waist * pump_waist * s * s / 2.0);
        }
        return std::exp(-qs_a * qs_a / (signal_width * signal_width) -
                        qi_a * qi_a / (idler_width * idler_width));
    }
};

inline JointAmplitude make_correlated_amplitude(double pump_waist) {
    if (pump_waist <= 0.0)
        throw DomainError("make_correlated_amplitude: pump waist must be positive");
    JointAmplitude a;
    a.kind = AmplitudeKind::correlated_gaussian;
    a.pump_waist = pump_waist;
    a.evaluator = [pump_waist](const Vec2& q_s, const Vec2& q_i) -> Complex {
        const Vec2 sum{q_s.x + q_i.x, q_s.y + q_i.y};
        return std::exp(-pump_waist * pump_waist * norm_sq(sum) / 4.0);
    };
    return a;
}

inline JointAmplitude make_separable_amplitude(double signal_width, double idler_width) {
    if (signal_width <= 0.0 || idler_width <= 0.0)
        throw DomainError("make_separable_amplitude: widths must be positive");
    JointAmplitude a;
    a.kind = AmplitudeKind::separable_gaussian;
    a.signal_width = signal_width;
    a.idler_width = idler_width;
    a.evaluator = [signal_width, idler_width](const Vec2& q_s, const Vec2& q_i) -> Complex {
        return std::exp(-norm_sq(q_s) / (2.0 * signal_width * signal_width)) *
               std::exp(-norm_sq(q_i) / (2.0 * idler_width * idler_width));
    };
    return a;
}

inline JointAmplitude make_custom_amplitude(std::function<Complex(const Vec2&, const Vec2&)> f) {
    JointAmplitude a;
    a.kind = AmplitudeKind::custom;
    a.evaluator = std::move(f);
    return a;
}

// ---------------------------------------------------------------------------
// Idler-path transfer between the crystals
// ---------------------------------------------------------------------------

enum class PhaseKind { uniform, tilt, defocus, custom };

// Complex transfer applied to idler modes between NL1 and NL2: an amplitude
// transmission in [0, 1] plus a mode-dependent phase map.
struct IdlerTransfer {
    double transmission = 1.0;
    PhaseKind phase_kind = PhaseKind::uniform;
    double phi0 = 0.0;            // uniform interferometric offset, radians
    Vec2 tilt_gradient{0.0, 0.0}; // meters; phase = s . q_i
    double defocus_distance = 0.0; // equivalent propagation distance d
    std::function<double(const Vec2&)> custom_map;
};

inline void validate_transfer(const IdlerTransfer& t) {
    if (t.transmission < 0.0 || t.transmission > 1.0)
        throw DomainError("IdlerTransfer: transmission must lie in [0, 1]");
    if (t.phase_kind == PhaseKind::custom && !t.custom_map)
        throw DomainError("IdlerTransfer: custom phase kind needs a phase map");
}

inline IdlerTransfer uniform_transfer(double phi0, double transmission = 1.0) {
    IdlerTransfer t;
    t.phase_kind = PhaseKind::uniform;
    t.phi0 = phi0;
    t.transmission = transmission;
    validate_transfer(t);
    return t;
}

inline IdlerTransfer tilt_transfer(const Vec2& gradient, double phi0 = 0.0,
                                   double transmission = 1.0) {
    IdlerTransfer t;
    t.phase_kind = PhaseKind::tilt;
    t.tilt_gradient = gradient;
    t.phi0 = phi0;
    t.transmission = transmission;
    validate_transfer(t);
    return t;
}

inline IdlerTransfer defocus_transfer(double distance, double phi0 = 0.0,
                                      double transmission = 1.0) {
    IdlerTransfer t;
    t.phase_kind = PhaseKind::defocus;
    t.defocus_distance = distance;
    t.phi0 = phi0;
    t.transmission = transmission;
    validate_transfer(t);
    return t;
}

inline IdlerTransfer custom_transfer(std::function<double(const Vec2&)> map,
                                     double phi0 = 0.0, double transmission = 1.0) {
    IdlerTransfer t;
    t.phase_kind = PhaseKind::custom;
    t.custom_map = std::move(map);
    t.phi0 = phi0;
    t.transmission = transmission;
    validate_transfer(t);
    return t;
}

// Idler angle corresponding to a transverse wavevector.
inline double idler_angle_of(const Vec2& q_i, const OpticalConfig& cfg) {
    return norm(q_i) * cfg.lambda_i / (2.0 * std::numbers::pi);
}

// Total phase applied to idler mode q_i, including the uniform offset phi0.
inline double transfer_phase(const IdlerTransfer& transfer, const Vec2& q_i,
                             const OpticalConfig& cfg) {
    const double theta_i = idler_angle_of(q_i, cfg);
    if (theta_i >= kParaxialLimitRad)
        throw DomainError("transfer_phase: non-paraxial idler mode");
    switch (transfer.phase_kind) {
    case PhaseKind::uniform:
        return transfer.phi0;
    case PhaseKind::tilt:
        return transfer.phi0 + dot(transfer.tilt_gradient, q_i);
    case PhaseKind::defocus:
        return transfer.phi0 +
               propagation_phase(theta_i, transfer.defocus_distance, cfg.lambda_i);
    case PhaseKind::custom:
        return transfer.phi0 + transfer.custom_map(q_i);
    }
    throw DomainError("transfer_phase: unknown phase kind");
}

namespace detail {

// Per-axis phase contribution, excluding phi0 (valid for non-custom kinds).
// uniform: 0; tilt: s_a q_a; defocus: d lambda_i q_a^2 / (4 pi).
inline double transfer_phase_axis(const IdlerTransfer& transfer, int axis, double q_a,
                                  const OpticalConfig& cfg) {
    switch (transfer.phase_kind) {
    case PhaseKind::uniform:
        return 0.0;
    case PhaseKind::tilt:
        return (axis == 0 ? transfer.tilt_gradient.x : transfer.tilt_gradient.y) * q_a;
    case PhaseKind::defocus:
        return transfer.defocus_distance * cfg.lambda_i * q_a * q_a /
               (4.0 * std::numbers::pi);
    default:
        throw DomainError("transfer_phase_axis: custom phase is not axis-separable");
    }
}

// One-axis quadrature of the density factor and of density * exp(i phase),
// phi0 excluded. Both built-in amplitude kinds and all non-custom phase maps
// factorize over transverse axes, so the 2D integrals are products of these.
struct AxisIntegrals {
    double w = 0.0;
    Complex z{0.0, 0.0};
    double peak = 0.0;
    double edge = 0.0;
};

inline AxisIntegrals axis_integrals(const JointAmplitude& amp, const IdlerTransfer& transfer,
                                    const OpticalConfig& cfg, int axis, double qs_a,
                                    double center_a, double halfwidth, int n) {
    AxisIntegrals out;
    const double step = 2.0 * halfwidth / static_cast<double>(n - 1);
    double first = 0.0, last = 0.0;
    for (int j = 0; j < n; ++j) {
        const double q = center_a - halfwidth + step * static_cast<double>(j);
        const double dens = amp.density_axis(qs_a, q);
        out.w += dens;
        out.z += dens * std::polar(1.0, transfer_phase_axis(transfer, axis, q, cfg));
        out.peak = std::max(out.peak, dens);
        if (j == 0) first = dens;
        if (j == n - 1) last = dens;
    }
    out.w *= step;
    out.z *= step;
    out.edge = std::max(first, last);
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Mode projection (detection probability per camera point)
// ---------------------------------------------------------------------------

// Square integration window in idler momentum space.
struct MomentumWindow {
    Vec2 center{0.0, 0.0};
    double halfwidth = 0.0;
    int points_per_axis = 129;
};

// Window wide enough to capture the amplitude's idler support at this q_s.
// For the correlated kind the support is a Gaussian of width 1/w_p centered
// at -q_s; +-5/w_p keeps the edge weight below 1e-5 of the peak.
inline MomentumWindow default_momentum_window(const JointAmplitude& amp, const Vec2& q_s,
                                              int points_per_axis = 129) {
    MomentumWindow w;
    w.points_per_axis = points_per_axis;
    switch (amp.kind) {
    case AmplitudeKind::correlated_gaussian:
        w.center = Vec2{-q_s.x, -q_s.y};
        w.halfwidth = 5.0 / amp.pump_waist;
        return w;
    case AmplitudeKind::separable_gaussian:
        w.center = Vec2{0.0, 0.0};
        w.halfwidth = 5.0 * amp.idler_width;
        return w;
    case AmplitudeKind::custom:
        throw DomainError("default_momentum_window: custom amplitudes need an explicit window");
    }
    throw DomainError("default_momentum_window: unknown amplitude kind");
}

struct ModeIntensityResult {
    double mean_intensity = 0.0; // arbitrary units
    double visibility = 0.0;     // in [0, 1]
    double fringe_phase = 0.0;   // radians, phase of the interference term
};

// Detection probability of one signal mode q_s from the projected two-crystal
// state. Discrete quadrature over the idler window yields
//   W = int |C(q_s, q_i)|^2 dq_i
//   Z = int |C(q_s, q_i)|^2 t exp(i [phi_I(q_i) + phi0]) dq_i.
// The NL1 idler passes an amplitude filter t before NL2, so the undetected
// loss channel contributes W (1 - t^2)/2 to the singles; folding it in gives
//   mean = W + Re Z,
// which keeps the phase-averaged singles independent of t (a blocked idler
// does not change the signal intensities). The fringe contrast metric is
//   visibility = 2 |Z| / (W (1 + t^2)),
// which equals 1 exactly for t = 1 and a phase constant over the support.
inline ModeIntensityResult signal_mode_intensity(const Vec2& q_s, const JointAmplitude& amp,
                                                 const IdlerTransfer& transfer,
                                                 const OpticalConfig& cfg,
                                                 const MomentumWindow& window) {
    validate_transfer(transfer);
    if (window.halfwidth <= 0.0 || window.points_per_axis < 9)
        throw DomainError("signal_mode_intensity: invalid momentum window");

    const int n = window.points_per_axis;
    const double step = 2.0 * window.halfwidth / static_cast<double>(n - 1);
    const double t = transfer.transmission;

    // Paraxial guard at the window corner.
    {
        const double q_max = norm(window.center) + std::sqrt(2.0) * window.halfwidth;
        if (q_max * cfg.lambda_i / (2.0 * std::numbers::pi) >= kParaxialLimitRad)
            throw DomainError("signal_mode_intensity: window reaches non-paraxial idler modes");
    }

    double w_total = 0.0;
    Complex z_total(0.0, 0.0);
    double peak = 0.0, edge = 0.0;

    const bool fast = amp.separable_axes() && transfer.phase_kind != PhaseKind::custom;
    if (fast) {
        const detail::AxisIntegrals ax = detail::axis_integrals(
            amp, transfer, cfg, 0, q_s.x, window.center.x, window.halfwidth, n);
        const detail::AxisIntegrals ay = detail::axis_integrals(
            amp, transfer, cfg, 1, q_s.y, window.center.y, window.halfwidth, n);
        w_total = ax.w * ay.w;
        z_total = t * std::polar(1.0, transfer.phi0) * ax.z * ay.z;
        peak = ax.peak * ay.peak;
        edge = std::max(ax.edge * ay.peak, ax.peak * ay.edge);
    } else {
        const double area = step * step;
        for (int jx = 0; jx < n; ++jx) {
            const double qx = window.center.x - window.halfwidth + step * jx;
            for (int jy = 0; jy < n; ++jy) {
                const double qy = window.center.y - window.halfwidth + step * jy;
                const Vec2 q_i{qx, qy};
                const double dens = amp.density(q_s, q_i);
                w_total += dens * area;
                z_total += dens * t * std::polar(1.0, transfer_phase(transfer, q_i, cfg)) * area;
                peak = std::max(peak, dens);
                if (jx == 0 || jy == 0 || jx == n - 1 || jy == n - 1)
                    edge = std::max(edge, dens);
            }
        }
    }

    if (!(peak > 0.0) || !(w_total > 0.0))
        throw DomainError("signal_mode_intensity: degenerate state, amplitude has no "
                          "support inside the window");
    if (edge > 1e-3 * peak)
        throw SamplingError("signal_mode_intensity: window truncates the amplitude "
                            "(edge weight above 1e-3 of peak)");

    ModeIntensityResult r;
    r.mean_intensity = w_total + z_total.real();
    const double denom = w_total * (1.0 + t * t);
    double vis = (denom > 0.0) ? 2.0 * std::abs(z_total) / denom : 0.0;
    if (vis > 1.0 && vis < 1.0 + 1e-9) vis = 1.0; // quadrature round-off only
    r.visibility = vis;
    r.fringe_phase = (std::abs(z_total) > 0.0) ? std::arg(z_total) : 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// Closed-form fringe geometry
// ---------------------------------------------------------------------------

// lambda_eq = lambda_s^2 / lambda_i. Smaller than either physical wavelength
// for this configuration.
inline double equivalent_wavelength(const OpticalConfig& cfg) {
    return cfg.lambda_s * cfg.lambda_s / cfg.lambda_i;
}

struct RingPrediction {
    double order = 0.0;  // n; integer orders are maxima, half-integers minima
    double radius = 0.0; // camera-plane radius, meters
    bool is_max = false;
};

// Radii of circular fringe extrema on the camera for the extrema condition
//   (d / (2 f_c^2)) rho_n^2 + phi = n lambda_eq,
// where phi is the interferometric offset expressed in the same length-like
// units as lambda_eq. The offset is supplied here in radians and converted
// via phi_length = (phi_rad / 2 pi) * lambda_eq. Orders whose radicand is
// negative fall inside the center and are omitted.
inline std::vector<RingPrediction> predicted_extrema_radii(double d, double phi_rad,
                                                           const OpticalConfig& cfg,
                                                           const std::vector<double>& orders) {
    if (d <= 0.0) throw DomainError("predicted_extrema_radii: d must be positive");
    const double lambda_eq = equivalent_wavelength(cfg);
    const double phi_length = phi_rad / (2.0 * std::numbers::pi) * lambda_eq;
    std::vector<RingPrediction> out;
    out.reserve(orders.size());
    for (double n : orders) {
        if (n < 0.0) throw DomainError("predicted_extrema_radii: orders must be >= 0");
        const double twice = 2.0 * n;
        if (std::abs(twice - std::round(twice)) > 1e-9)
            throw DomainError("predicted_extrema_radii: orders must be half-integers");
        const double radicand = (n * lambda_eq - phi_length) * 2.0 * cfg.f_c * cfg.f_c / d;
        if (radicand < 0.0) continue;
        const bool is_max = std::abs(n - std::round(n)) < 0.25;
        out.push_back({n, std::sqrt(radicand), is_max});
    }
    return out;
}

} // namespace icfringe

#endif
