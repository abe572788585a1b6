#ifndef ICFRINGE_OPTICS_HPP
#define ICFRINGE_OPTICS_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "icfringe/errors.hpp"

namespace icfringe {

using Complex = std::complex<double>;

// Paraxial small-angle limit. Beyond this the linear angle/wavelength
// relation between signal and idler loses validity, so we refuse rather
// than silently degrade.
inline constexpr double kParaxialLimitRad = 0.2;

// Relative tolerance for the 1/lambda_p = 1/lambda_s + 1/lambda_i check.
inline constexpr double kEnergyTolerance = 1e-3;

inline bool check_energy_conservation(double lambda_s, double lambda_i, double lambda_p) {
    if (lambda_s <= 0.0 || lambda_i <= 0.0 || lambda_p <= 0.0)
        throw DomainError("check_energy_conservation: wavelengths must be positive");
    const double lhs = 1.0 / lambda_p;
    const double rhs = 1.0 / lambda_s + 1.0 / lambda_i;
    return std::abs(lhs - rhs) / lhs <= kEnergyTolerance;
}

// All physical parameters of the interferometer. Lengths in meters.
struct OpticalConfig {
    double lambda_s;   // signal wavelength (detected)
    double lambda_i;   // idler wavelength (never detected)
    double lambda_p;   // pump wavelength
    double f_c;        // focal length of the lens in front of the camera
    double f_idler;    // focal length of the idler 4f lenses
    double pump_waist; // Gaussian pump waist w_p at the crystals

    OpticalConfig(double lambda_s_, double lambda_i_, double lambda_p_,
                  double f_c_ = 0.150, double f_idler_ = 0.100,
                  double pump_waist_ = 250e-6)
        : lambda_s(lambda_s_), lambda_i(lambda_i_), lambda_p(lambda_p_),
          f_c(f_c_), f_idler(f_idler_), pump_waist(pump_waist_) {
        if (lambda_s <= 0 || lambda_i <= 0 || lambda_p <= 0 || f_c <= 0 ||
            f_idler <= 0 || pump_waist <= 0)
            throw DomainError("OpticalConfig: all lengths must be positive");
        if (!check_energy_conservation(lambda_s, lambda_i, lambda_p))
            throw DomainError(
                "OpticalConfig: wavelengths violate 1/lambda_p = 1/lambda_s + 1/lambda_i");
        if (!(lambda_s < lambda_i))
            throw DomainError("OpticalConfig: expected lambda_s < lambda_i");
    }

    double k_signal() const { return 2.0 * std::numbers::pi / lambda_s; }
    double k_idler() const { return 2.0 * std::numbers::pi / lambda_i; }
};

// Default bench configuration: 810 nm signal, 1550 nm idler, 532 nm pump.
inline OpticalConfig default_optical_config() {
    return OpticalConfig(810e-9, 1550e-9, 532e-9);
}

// theta_i = theta_s * lambda_i / lambda_s (sign preserving).
inline double signal_angle_to_idler_angle(double theta_s, const OpticalConfig& cfg) {
    if (std::abs(theta_s) >= kParaxialLimitRad)
        throw DomainError("signal_angle_to_idler_angle: non-paraxial signal angle");
    return theta_s * cfg.lambda_i / cfg.lambda_s;
}

struct AnglePair {
    double theta_s;
    double theta_i;
};

// Camera-plane radius rho maps to the signal angle rho/f_c and, through the
// transverse momentum anti-correlation, to the partner idler angle.
inline AnglePair camera_radius_to_angles(double rho, const OpticalConfig& cfg) {
    if (rho < 0.0) throw DomainError("camera_radius_to_angles: rho must be >= 0");
    const double theta_s = rho / cfg.f_c;
    return {theta_s, theta_s * cfg.lambda_i / cfg.lambda_s};
}

struct DefocusDistance {
    double distance;       // equivalent free-space propagation distance d
    double validity_ratio; // delta^2 / f^2; the approximation degrades as it grows
};

// d = f^2 delta / (f^2 + delta^2). Odd in delta, maximal (f/2) at delta = f.
inline DefocusDistance defocus_to_distance(double delta, double f_idler) {
    if (f_idler <= 0.0) throw DomainError("defocus_to_distance: f_idler must be positive");
    const double f2 = f_idler * f_idler;
    return {f2 * delta / (f2 + delta * delta), delta * delta / f2};
}

// Quadratic propagation phase picked up by an idler plane wave at angle
// theta_i after free-space propagation by d:  (2 pi / lambda_i) d theta_i^2 / 2.
inline double propagation_phase(double theta_i, double d, double lambda_i) {
    if (std::abs(theta_i) >= kParaxialLimitRad)
        throw DomainError("propagation_phase: non-paraxial idler angle");
    if (lambda_i <= 0.0) throw DomainError("propagation_phase: lambda_i must be positive");
    return (2.0 * std::numbers::pi / lambda_i) * d * theta_i * theta_i / 2.0;
}

// One-dimensional sampled complex field. Coordinates of sample j are
// origin + j * spacing.
struct ComplexField1D {
    std::vector<Complex> samples;
    double spacing = 0.0;
    double origin = 0.0;

    ComplexField1D() = default;
    ComplexField1D(std::vector<Complex> samples_, double spacing_, double origin_)
        : samples(std::move(samples_)), spacing(spacing_), origin(origin_) {
        if (spacing <= 0.0) throw DomainError("ComplexField1D: spacing must be positive");
        if (samples.size() < 8) throw DomainError("ComplexField1D: need at least 8 samples");
    }

    std::size_t size() const { return samples.size(); }
    double coordinate(std::size_t j) const { return origin + static_cast<double>(j) * spacing; }

    // Discrete power: sum |u|^2 * spacing.
    double power() const {
        double p = 0.0;
        for (const Complex& c : samples) p += std::norm(c);
        return p * spacing;
    }
};

// Gaussian field exp(-x^2 / waist^2) sampled symmetrically on n points over
// [-extent/2, extent/2].
inline ComplexField1D gaussian_field(double waist, double extent, std::size_t n) {
    if (waist <= 0.0 || extent <= 0.0) throw DomainError("gaussian_field: bad parameters");
    if (n < 8) throw DomainError("gaussian_field: need at least 8 samples");
    const double spacing = extent / static_cast<double>(n - 1);
    std::vector<Complex> s(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = -extent / 2.0 + static_cast<double>(j) * spacing;
        s[j] = std::exp(-x * x / (waist * waist));
    }
    return ComplexField1D(std::move(s), spacing, -extent / 2.0);
}

namespace detail {

// Anti-aliasing guard for a kernel with quadratic phase (k/2) x^2 / denom:
// the phase increment between adjacent samples at the grid edge must stay
// below pi.
inline void require_unaliased(const ComplexField1D& u, double k, double denom,
                              const char* op) {
    const double half_extent =
        0.5 * u.spacing * static_cast<double>(u.size() - 1);
    const double edge_increment = std::abs(k / denom) * half_extent * u.spacing;
    if (edge_increment >= std::numbers::pi)
        throw SamplingError(std::string(op) +
                            ": quadratic kernel phase aliased at grid edge; "
                            "use a finer grid or a larger propagation scale");
}

inline void rescale_power(ComplexField1D& u, double target_power) {
    const double p = u.power();
    if (p <= 0.0) return;
    const double s = std::sqrt(target_power / p);
    for (Complex& c : u.samples) c *= s;
}

} // namespace detail

// Field at the second crystal plane produced by the 4f idler imaging system
// with its first lens displaced by delta along the axis. Direct quadrature of
//   U(x) ~ int dxi U0(xi) exp( (i k/2) [ x^2 (1/delta + delta/f^2)
//                                        - 2 x xi / delta + xi^2 / delta ] ).
// The output grid matches the input grid; the overall complex scale is fixed
// by normalizing output power to input power.
// TODO: add an FFT fast path for grids beyond 4k samples; it must match this
// direct sum to 1e-6.
inline ComplexField1D displaced_lens_field(const ComplexField1D& u0, double delta,
                                           double f_idler, double k) {
    if (delta == 0.0)
        throw DomainError("displaced_lens_field: delta = 0 makes the kernel degenerate");
    if (f_idler <= 0.0 || k <= 0.0)
        throw DomainError("displaced_lens_field: f_idler and k must be positive");
    detail::require_unaliased(u0, k, delta, "displaced_lens_field");

    const std::size_t n = u0.size();
    const double a_out = 1.0 / delta + delta / (f_idler * f_idler);
    std::vector<Complex> out(n);
    std::vector<double> xs(n);
    for (std::size_t j = 0; j < n; ++j) xs[j] = u0.coordinate(j);

    for (std::size_t ix = 0; ix < n; ++ix) {
        const double x = xs[ix];
        Complex acc(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double xi = xs[j];
            const double phase =
                0.5 * k * (x * x * a_out - 2.0 * x * xi / delta + xi * xi / delta);
            acc += u0.samples[j] * std::polar(1.0, phase);
        }
        out[ix] = acc * u0.spacing;
    }
    ComplexField1D result(std::move(out), u0.spacing, u0.origin);
    detail::rescale_power(result, u0.power());
    return result;
}

// Free-space Fresnel propagation by distance d:
//   U(x) ~ (1/sqrt(i lambda d)) int dxi U0(xi) exp( i k (x - xi)^2 / (2 d) ),
// output power normalized to input power. d = 0 returns the input unchanged.
inline ComplexField1D fresnel_propagate(const ComplexField1D& u0, double d, double k) {
    if (k <= 0.0) throw DomainError("fresnel_propagate: k must be positive");
    if (d == 0.0) return u0;
    detail::require_unaliased(u0, k, d, "fresnel_propagate");

    const std::size_t n = u0.size();
    std::vector<Complex> out(n);
    std::vector<double> xs(n);
    for (std::size_t j = 0; j < n; ++j) xs[j] = u0.coordinate(j);

    const double lambda = 2.0 * std::numbers::pi / k;
    // 1/sqrt(i lambda d), with the sign of d folded into the square root.
    const Complex prefactor =
        1.0 / std::sqrt(Complex(0.0, lambda * d));

    for (std::size_t ix = 0; ix < n; ++ix) {
        const double x = xs[ix];
        Complex acc(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double dx = x - xs[j];
            acc += u0.samples[j] * std::polar(1.0, 0.5 * k * dx * dx / d);
        }
        out[ix] = prefactor * acc * u0.spacing;
    }
    ComplexField1D result(std::move(out), u0.spacing, u0.origin);
    detail::rescale_power(result, u0.power());
    return result;
}

// Relative L2 difference between two fields minimized over a global complex
// scale:   min_c ||a - c b|| / ||a||.  Zero for fields equal up to a global
// amplitude and phase.
inline double field_mismatch(const ComplexField1D& a, const ComplexField1D& b) {
    if (a.size() != b.size() || a.spacing != b.spacing || a.origin != b.origin)
        throw DomainError("field_mismatch: fields must share one grid");
    double na2 = 0.0, nb2 = 0.0;
    Complex inner(0.0, 0.0);
    for (std::size_t j = 0; j < a.size(); ++j) {
        na2 += std::norm(a.samples[j]);
        nb2 += std::norm(b.samples[j]);
        inner += std::conj(b.samples[j]) * a.samples[j];
    }
    if (na2 <= 0.0) throw DomainError("field_mismatch: reference field has zero power");
    if (nb2 <= 0.0) return 1.0;
    // Optimal scale c = <b,a>/||b||^2; the residual is summed elementwise to
    // avoid cancellation when a and c b nearly coincide.
    const Complex c = inner / nb2;
    double residual2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
        residual2 += std::norm(a.samples[j] - c * b.samples[j]);
    return std::sqrt(residual2 / na2);
}

} // namespace icfringe

#endif
