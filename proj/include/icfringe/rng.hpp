#ifndef ICFRINGE_RNG_HPP
#define ICFRINGE_RNG_HPP

#include <cmath>
#include <cstdint>

namespace icfringe {

// Small deterministic generator (splitmix64). The standard library
// distributions are implementation-defined, which would break the
// byte-identical-output contract, so sampling is done here explicitly.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in (0, 1].
    double uniform() {
        return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

// Independent stream for one pixel of one frame, derived from the frame seed
// and the pixel index. Parallel rendering stays deterministic regardless of
// scheduling because each pixel owns its stream.
inline SplitMix64 pixel_stream(std::uint64_t seed, std::uint64_t pixel_index) {
    SplitMix64 mix(pixel_index * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL);
    return SplitMix64(seed ^ mix.next());
}

namespace detail {

// Knuth's product-of-uniforms sampler; cost grows linearly with the mean.
inline std::uint64_t poisson_small(double mean, SplitMix64& rng) {
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = rng.uniform();
    while (prod > limit) {
        ++k;
        prod *= rng.uniform();
    }
    return k;
}

// Hoermann's PTRD transformed-rejection sampler for large means.
inline std::uint64_t poisson_ptrd(double mean, SplitMix64& rng) {
    const double smu = std::sqrt(mean);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);

    for (;;) {
        double u = rng.uniform() - 0.5;
        double v = rng.uniform();
        const double us = 0.5 - std::abs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us)) continue;
        const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        const double rhs = kf * log_mean - mean - std::lgamma(kf + 1.0);
        if (lhs <= rhs) return static_cast<std::uint64_t>(kf);
    }
}

} // namespace detail

inline std::uint64_t poisson_sample(double mean, SplitMix64& rng) {
    if (!(mean > 0.0)) return 0;
    if (mean < 30.0) return detail::poisson_small(mean, rng);
    return detail::poisson_ptrd(mean, rng);
}

} // namespace icfringe

#endif
