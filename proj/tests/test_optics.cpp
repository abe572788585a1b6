#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "icfringe/optics.hpp"
#include "oracles.hpp"

using namespace icfringe;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("energy conservation check") {
    CHECK(check_energy_conservation(810e-9, 1550e-9, 532e-9));
    CHECK(check_energy_conservation(810e-9, 810e-9, 405e-9));
    CHECK_FALSE(check_energy_conservation(810e-9, 1550e-9, 600e-9));
    CHECK_THROWS_AS(check_energy_conservation(-810e-9, 1550e-9, 532e-9), DomainError);
    CHECK_THROWS_AS(check_energy_conservation(810e-9, 0.0, 532e-9), DomainError);
}

TEST_CASE("optical config invariants") {
    CHECK_NOTHROW(default_optical_config());
    CHECK_THROWS_AS(OpticalConfig(810e-9, 1550e-9, 600e-9), DomainError);
    CHECK_THROWS_AS(OpticalConfig(1550e-9, 810e-9, 532e-9), DomainError); // signal not shorter
    CHECK_THROWS_AS(OpticalConfig(810e-9, 1550e-9, 532e-9, -0.15), DomainError);
}

TEST_CASE("signal angle to idler angle") {
    const OpticalConfig cfg = default_optical_config();
    CHECK(signal_angle_to_idler_angle(0.0, cfg) == 0.0);
    CHECK_THAT(signal_angle_to_idler_angle(10e-3, cfg),
               WithinRel(0.019135802469135803, 1e-12));
    CHECK_THAT(signal_angle_to_idler_angle(-5e-3, cfg),
               WithinRel(-0.009567901234567901, 1e-12));
    CHECK_THROWS_AS(signal_angle_to_idler_angle(0.25, cfg), DomainError);
}

TEST_CASE("camera radius to angles") {
    const OpticalConfig cfg = default_optical_config();
    const AnglePair zero = camera_radius_to_angles(0.0, cfg);
    CHECK(zero.theta_s == 0.0);
    CHECK(zero.theta_i == 0.0);

    const AnglePair one_mm = camera_radius_to_angles(1e-3, cfg);
    CHECK_THAT(one_mm.theta_s, WithinRel(0.006666666666666667, 1e-12));
    CHECK_THAT(one_mm.theta_i, WithinRel(0.012757201646090535, 1e-12));

    const AnglePair two_mm = camera_radius_to_angles(2e-3, cfg);
    CHECK_THAT(two_mm.theta_s, WithinRel(2.0 * one_mm.theta_s, 1e-14));

    CHECK_THROWS_AS(camera_radius_to_angles(-1e-3, cfg), DomainError);

    // Composition with the angle relation is consistent.
    for (double rho : {0.1e-3, 0.7e-3, 1.9e-3, 4.2e-3}) {
        const AnglePair p = camera_radius_to_angles(rho, cfg);
        CHECK_THAT(p.theta_i, WithinRel(signal_angle_to_idler_angle(p.theta_s, cfg), 1e-14));
    }
}

TEST_CASE("defocus to distance") {
    CHECK(defocus_to_distance(0.0, 0.1).distance == 0.0);
    CHECK_THAT(defocus_to_distance(0.1, 0.1).distance, WithinRel(0.05, 1e-14));

    const DefocusDistance r = defocus_to_distance(25e-3, 100e-3);
    CHECK_THAT(r.distance, WithinRel(0.023529411764705882, 1e-12));
    CHECK_THAT(r.validity_ratio, WithinRel(0.0625, 1e-12));

    CHECK_THROWS_AS(defocus_to_distance(1e-3, 0.0), DomainError);

    SECTION("odd in delta, monotone below f, maximal at f") {
        double prev = 0.0;
        for (int i = 1; i <= 20; ++i) {
            const double delta = 0.1 * i / 20.0;
            const double d = defocus_to_distance(delta, 0.1).distance;
            CHECK(defocus_to_distance(-delta, 0.1).distance == -d);
            CHECK(d > prev);
            prev = d;
        }
        CHECK_THAT(prev, WithinRel(0.05, 1e-14)); // delta = f gives f/2
        CHECK(defocus_to_distance(0.15, 0.1).distance < 0.05);
    }
}

TEST_CASE("propagation phase") {
    CHECK(propagation_phase(0.0, 17e-3, 1550e-9) == 0.0);
    // Direct evaluation at theta_i = 12.7572 mrad (rho = 1 mm, f_c = 150 mm).
    const double theta_i = 0.012757201646090535;
    CHECK_THAT(propagation_phase(theta_i, 17e-3, 1550e-9),
               WithinRel(5.6076117408993245, 1e-12));
    CHECK(propagation_phase(-theta_i, 17e-3, 1550e-9) ==
          propagation_phase(theta_i, 17e-3, 1550e-9));
    CHECK_THAT(propagation_phase(2.0 * theta_i, 17e-3, 1550e-9),
               WithinRel(4.0 * propagation_phase(theta_i, 17e-3, 1550e-9), 1e-14));
    CHECK(propagation_phase(theta_i, -3e-3, 1550e-9) < 0.0);
    CHECK_THROWS_AS(propagation_phase(0.3, 17e-3, 1550e-9), DomainError);
}

TEST_CASE("complex field basics") {
    CHECK_THROWS_AS(ComplexField1D({}, 1e-6, 0.0), DomainError);
    const ComplexField1D g = gaussian_field(100e-6, 2e-3, 512);
    CHECK(g.size() == 512);
    CHECK(g.power() > 0.0);
    CHECK_THAT(g.coordinate(511), WithinAbs(1e-3, 1e-12));
}

TEST_CASE("fresnel propagation") {
    const double lambda = 1550e-9;
    const double k = 2.0 * std::numbers::pi / lambda;

    SECTION("d = 0 is the identity") {
        const ComplexField1D g = gaussian_field(100e-6, 2e-3, 256);
        const ComplexField1D out = fresnel_propagate(g, 0.0, k);
        CHECK(field_mismatch(g, out) == 0.0);
    }

    SECTION("Gaussian width follows the analytic beam expansion") {
        const double w0 = 50e-6;
        const ComplexField1D g = gaussian_field(w0, 1.2e-3, 1024);
        for (double d : {2e-3, 5e-3, 8e-3}) {
            const ComplexField1D out = fresnel_propagate(g, d, k);
            // Width from the intensity second moment: |U|^2 ~ exp(-2x^2/w^2).
            double m0 = 0.0, m2 = 0.0;
            for (std::size_t j = 0; j < out.size(); ++j) {
                const double x = out.coordinate(j);
                const double i = std::norm(out.samples[j]);
                m0 += i;
                m2 += i * x * x;
            }
            const double width = 2.0 * std::sqrt(m2 / m0);
            CHECK_THAT(width, WithinRel(oracles::gaussian_beam_width(w0, d, k), 0.01));
        }
    }

    SECTION("power is preserved") {
        const ComplexField1D g = gaussian_field(60e-6, 1.5e-3, 1024);
        const ComplexField1D out = fresnel_propagate(g, 4e-3, k);
        CHECK_THAT(out.power(), WithinRel(g.power(), 0.01));
    }
}

TEST_CASE("displaced lens field") {
    const double lambda = 1550e-9;
    const double k = 2.0 * std::numbers::pi / lambda;
    const double f = 100e-3;

    SECTION("degenerate and aliased inputs are rejected") {
        const ComplexField1D g = gaussian_field(100e-6, 2e-3, 256);
        CHECK_THROWS_AS(displaced_lens_field(g, 0.0, f, k), DomainError);
        CHECK_THROWS_AS(displaced_lens_field(g, 1e-3, f, k), SamplingError);
    }

    SECTION("small defocus approaches Fresnel propagation by d(delta)") {
        const ComplexField1D g = gaussian_field(100e-6, 2e-3, 4096);
        const double delta = 1e-3; // delta^2/f^2 = 1e-4
        const double d = defocus_to_distance(delta, f).distance;
        const ComplexField1D a = displaced_lens_field(g, delta, f, k);
        const ComplexField1D b = fresnel_propagate(g, d, k);
        CHECK(field_mismatch(a, b) < 1e-3);
    }

    SECTION("linear in the input field") {
        const ComplexField1D g = gaussian_field(100e-6, 2e-3, 1024);
        ComplexField1D scaled = g;
        const Complex c(0.8, -1.7);
        for (auto& s : scaled.samples) s *= c;
        const ComplexField1D out = displaced_lens_field(g, 20e-3, f, k);
        ComplexField1D expected = out;
        for (auto& s : expected.samples) s *= c;
        const ComplexField1D out_scaled = displaced_lens_field(scaled, 20e-3, f, k);
        CHECK(field_mismatch(expected, out_scaled) < 1e-12);
        // and with an exactly matching global scale, not just up to one
        for (std::size_t j = 0; j < out.size(); ++j)
            CHECK_THAT(std::abs(out_scaled.samples[j] - c * out.samples[j]), WithinAbs(0.0, 1e-9));
    }

    SECTION("symmetric input gives symmetric output magnitude") {
        const ComplexField1D g = gaussian_field(100e-6, 2e-3, 1024);
        const ComplexField1D out = displaced_lens_field(g, 20e-3, f, k);
        const std::size_t n = out.size();
        double worst = 0.0;
        for (std::size_t j = 0; j < n / 2; ++j)
            worst = std::max(worst, std::abs(std::abs(out.samples[j]) -
                                             std::abs(out.samples[n - 1 - j])));
        double peak = 0.0;
        for (const auto& s : out.samples) peak = std::max(peak, std::abs(s));
        CHECK(worst / peak < 1e-9);
    }

    SECTION("kernel equivalence holds through the validity bound") {
        const ComplexField1D g = gaussian_field(100e-6, 2e-3, 1024);
        double previous = 0.0;
        for (double ratio : {0.01, 0.04, 0.06}) {
            const double delta = std::sqrt(ratio) * f;
            const double d = defocus_to_distance(delta, f).distance;
            const double m = field_mismatch(displaced_lens_field(g, delta, f, k),
                                            fresnel_propagate(g, d, k));
            CHECK(m < 0.05);
            CHECK(m >= previous);
            previous = m;
        }
    }
}

TEST_CASE("field mismatch metric") {
    const ComplexField1D g = gaussian_field(100e-6, 2e-3, 256);
    CHECK(field_mismatch(g, g) == 0.0);

    ComplexField1D rotated = g;
    for (auto& s : rotated.samples) s *= std::polar(1.0, std::numbers::pi / 3.0);
    CHECK(field_mismatch(g, rotated) < 1e-12);

    ComplexField1D tilted = g;
    for (std::size_t j = 0; j < tilted.size(); ++j)
        tilted.samples[j] *= std::polar(1.0, tilted.coordinate(j) / 100e-6);
    CHECK(field_mismatch(g, tilted) > 0.1);

    const ComplexField1D other = gaussian_field(100e-6, 2e-3, 128);
    CHECK_THROWS_AS(field_mismatch(g, other), DomainError);

    ComplexField1D zero = g;
    for (auto& s : zero.samples) s = 0.0;
    CHECK_THROWS_AS(field_mismatch(zero, g), DomainError);
}
