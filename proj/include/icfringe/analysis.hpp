#ifndef ICFRINGE_ANALYSIS_HPP
#define ICFRINGE_ANALYSIS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "icfringe/errors.hpp"
#include "icfringe/imaging.hpp"

namespace icfringe {

// Tunables of the extraction pipeline. Defaults follow the pipeline contract;
// all of them are surfaced in the run configuration.
struct AnalysisParams {
    double bin_width = 0.0;        // radial bin width (m); 0 = one pixel pitch
    double prominence = 0.05;      // extremum prominence, fraction of local modulation
    int smooth_halfwidth = 2;      // moving-average half-width, bins
    double center_search_px = 3.0; // center refinement range around the centroid
    double center_step_px = 0.1;   // center refinement lattice step
};

struct RadialProfile {
    std::vector<double> radii;          // bin centers, meters
    std::vector<double> mean_intensity; // per-bin azimuthal mean
    std::vector<long> counts_per_bin;   // zero marks an empty (unusable) bin
    Vec2 center_used{0.0, 0.0};         // meters
};

enum class ExtremumKind { maximum, minimum };

struct Extremum {
    double order = 0.0;  // n; integer for maxima, half-integer for minima
    double radius = 0.0; // meters
    ExtremumKind kind = ExtremumKind::maximum;
    double uncertainty = 0.0; // meters; half the interpolation support = one bin
};

struct ExtremaSet {
    std::vector<Extremum> entries; // strictly increasing radius, alternating kind
};

struct ParabolicFit {
    double a = 0.0;            // quadratic coefficient of n = a rho^2 + phi', 1/m^2
    double phi_prime = 0.0;    // dimensionless offset
    double residual_rms = 0.0; // RMS of order residuals
    std::array<std::array<double, 2>, 2> covariance{}; // over (a, phi')
};

struct ValueWithSigma {
    double value = 0.0;
    double sigma = 0.0;
};

struct WavelengthEstimate {
    double lambda_eq = 0.0; // meters
    double sigma = 0.0;     // standard error, meters
    ValueWithSigma slope;   // d(a)/d(d), 1/m^3
    ValueWithSigma intercept;
};

namespace detail {

struct LineFit {
    double slope = 0.0, intercept = 0.0;
    double slope_sigma = 0.0, intercept_sigma = 0.0;
    std::array<std::array<double, 2>, 2> covariance{};
    double chi2 = 0.0;
};

// Weighted least squares for y = slope * x + intercept. With per-point sigmas
// the covariance comes from the weight matrix, inflated by the reduced
// chi-square when the scatter exceeds the stated errors; without sigmas it is
// the usual OLS residual-based covariance.
inline LineFit weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                                 const std::vector<double>& sigma) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n)
        throw FitError("weighted_line_fit: need at least 2 points");
    const bool weighted = !sigma.empty();
    double s = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
        s += w;
        sx += w * x[i];
        sxx += w * x[i] * x[i];
        sy += w * y[i];
        sxy += w * x[i] * y[i];
    }
    const double delta = s * sxx - sx * sx;
    if (!(std::abs(delta) > 1e-300 * std::max(1.0, s * sxx)))
        throw FitError("weighted_line_fit: degenerate design matrix (x values coincide)");

    LineFit fit;
    fit.slope = (s * sxy - sx * sy) / delta;
    fit.intercept = (sxx * sy - sx * sxy) / delta;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
        const double r = y[i] - (fit.slope * x[i] + fit.intercept);
        fit.chi2 += w * r * r;
    }
    const double dof = static_cast<double>(n) - 2.0;
    double scale;
    if (weighted)
        scale = (dof > 0.0) ? std::max(1.0, fit.chi2 / dof) : 1.0;
    else
        scale = (dof > 0.0) ? fit.chi2 / dof : 0.0;
    fit.covariance[0][0] = scale * s / delta;     // var(slope)
    fit.covariance[1][1] = scale * sxx / delta;   // var(intercept)
    fit.covariance[0][1] = fit.covariance[1][0] = -scale * sx / delta;
    fit.slope_sigma = std::sqrt(std::max(0.0, fit.covariance[0][0]));
    fit.intercept_sigma = std::sqrt(std::max(0.0, fit.covariance[1][1]));
    return fit;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Center estimation
// ---------------------------------------------------------------------------

namespace detail {

// Pooled azimuthal variance of the radial profile around a candidate center.
// The true fringe center minimizes it: off-center, each annulus mixes
// different fringe phases.
inline double azimuthal_variance_score(const FringeImage& img, double cx, double cy,
                                       double r_lim_px) {
    const int w = img.camera.width_px, h = img.camera.height_px;
    const int nbins = static_cast<int>(r_lim_px) + 2;
    std::vector<double> sum(nbins, 0.0), sumsq(nbins, 0.0);
    std::vector<long> cnt(nbins, 0);
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - r_lim_px)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + r_lim_px)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - r_lim_px)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + r_lim_px)));
    const double r2_lim = r_lim_px * r_lim_px;
    for (int y = y0; y <= y1; ++y) {
        const double dy = y - cy;
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - cx;
            const double r2 = dx * dx + dy * dy;
            if (r2 > r2_lim) continue;
            const int b = static_cast<int>(std::sqrt(r2));
            const double v = img.at(y, x);
            sum[b] += v;
            sumsq[b] += v * v;
            ++cnt[b];
        }
    }
    double score = 0.0;
    long total = 0;
    for (int b = 0; b < nbins; ++b) {
        if (cnt[b] < 2) continue;
        score += sumsq[b] - sum[b] * sum[b] / static_cast<double>(cnt[b]);
        total += cnt[b];
    }
    return (total > 0) ? score / static_cast<double>(total) : 0.0;
}

} // namespace detail

// Fringe-pattern center in (fractional) pixel coordinates: the intensity
// centroid refined by minimizing the azimuthal variance of the radial profile
// on a 0.1 px lattice within +-3 px (coarse 0.5 px pass first). Deterministic.
inline Vec2 estimate_center(const FringeImage& img, const AnalysisParams& params = {}) {
    validate_camera(img.camera);
    double vmax = 0.0, vmin = std::numeric_limits<double>::infinity(), vsum = 0.0;
    double mx = 0.0, my = 0.0;
    const int w = img.camera.width_px, h = img.camera.height_px;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = img.at(y, x);
            vmax = std::max(vmax, v);
            vmin = std::min(vmin, v);
            vsum += v;
            mx += v * x;
            my += v * y;
        }
    if (!(vmax > 0.0) || vmax - vmin <= 1e-12 * vmax)
        throw FitError("estimate_center: flat image has no fringe center");

    // Snap the centroid to the refinement lattice so the search grid (and
    // with it the result) is invariant under intensity rescaling.
    const double step0 = params.center_step_px;
    double cx = std::round(mx / vsum / step0) * step0;
    double cy = std::round(my / vsum / step0) * step0;
    cx = std::clamp(cx, 1.0, static_cast<double>(w - 2));
    cy = std::clamp(cy, 1.0, static_cast<double>(h - 2));

    const double border = std::min({cx, cy, w - 1.0 - cx, h - 1.0 - cy}) -
                          params.center_search_px - 1.0;
    const double r_lim = std::min(border, 1.25 * img.camera.envelope_radius /
                                              img.camera.pixel_pitch);
    if (r_lim < 4.0) throw FitError("estimate_center: pattern too close to the border");

    auto refine = [&](double bx, double by, double range, double step) {
        double best_score = std::numeric_limits<double>::infinity();
        double best_x = bx, best_y = by;
        const int half = static_cast<int>(std::round(range / step));
        for (int iy = -half; iy <= half; ++iy)
            for (int ix = -half; ix <= half; ++ix) {
                const double x = bx + step * ix, y = by + step * iy;
                const double score = detail::azimuthal_variance_score(img, x, y, r_lim);
                if (score < best_score) {
                    best_score = score;
                    best_x = x;
                    best_y = y;
                }
            }
        return Vec2{best_x, best_y};
    };
    const double coarse_step = 5.0 * params.center_step_px;
    Vec2 c = refine(cx, cy, params.center_search_px, coarse_step);
    c = refine(c.x, c.y, coarse_step, params.center_step_px);
    return c;
}

// ---------------------------------------------------------------------------
// Radial profile
// ---------------------------------------------------------------------------

inline RadialProfile radial_profile(const FringeImage& img, const Vec2& center_px,
                                    double bin_width) {
    validate_camera(img.camera);
    const double pitch = img.camera.pixel_pitch;
    if (bin_width < pitch / 2.0)
        throw DomainError("radial_profile: bin width below half a pixel pitch");
    const int w = img.camera.width_px, h = img.camera.height_px;
    if (center_px.x < 0.0 || center_px.x > w - 1.0 || center_px.y < 0.0 ||
        center_px.y > h - 1.0)
        throw DomainError("radial_profile: center outside the image");

    double r_max = 0.0;
    for (int cx : {0, w - 1})
        for (int cy : {0, h - 1})
            r_max = std::max(r_max, std::hypot((cx - center_px.x) * pitch,
                                               (cy - center_px.y) * pitch));
    const auto nbins = static_cast<std::size_t>(r_max / bin_width) + 1;

    RadialProfile p;
    p.center_used = Vec2{center_px.x * pitch, center_px.y * pitch};
    p.radii.resize(nbins);
    p.mean_intensity.assign(nbins, 0.0);
    p.counts_per_bin.assign(nbins, 0);
    for (std::size_t b = 0; b < nbins; ++b)
        p.radii[b] = (static_cast<double>(b) + 0.5) * bin_width;

    for (int y = 0; y < h; ++y) {
        const double dy = (y - center_px.y) * pitch;
        for (int x = 0; x < w; ++x) {
            const double dx = (x - center_px.x) * pitch;
            const auto b = static_cast<std::size_t>(std::hypot(dx, dy) / bin_width);
            if (b >= nbins) continue;
            p.mean_intensity[b] += img.at(y, x);
            ++p.counts_per_bin[b];
        }
    }
    for (std::size_t b = 0; b < nbins; ++b)
        if (p.counts_per_bin[b] > 0)
            p.mean_intensity[b] /= static_cast<double>(p.counts_per_bin[b]);
    return p;
}

// ---------------------------------------------------------------------------
// Extrema extraction
// ---------------------------------------------------------------------------

namespace detail {

struct Candidate {
    std::size_t index = 0;
    double value = 0.0;
    bool is_max = false;
};

// Alternating extrema from sign changes of the discrete derivative.
inline std::vector<Candidate> derivative_sign_changes(const std::vector<double>& v) {
    std::vector<Candidate> out;
    int last_sign = 0;
    std::size_t last_idx = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double d = v[i] - v[i - 1];
        const int sign = (d > 0.0) ? 1 : (d < 0.0 ? -1 : 0);
        if (sign == 0) continue;
        if (last_sign != 0 && sign != last_sign)
            out.push_back({last_idx, v[last_idx], last_sign > 0});
        last_sign = sign;
        last_idx = i;
    }
    return out;
}

// Median fringe wavenumber in s = rho^2 from the candidate spacing; adjacent
// extrema sit half a period apart.
inline double median_wavenumber(const std::vector<Candidate>& cands,
                                const std::vector<double>& radii) {
    std::vector<double> ks;
    for (std::size_t j = 0; j + 1 < cands.size(); ++j) {
        const double s0 = radii[cands[j].index] * radii[cands[j].index];
        const double s1 = radii[cands[j + 1].index] * radii[cands[j + 1].index];
        if (s1 > s0) ks.push_back(std::numbers::pi / (s1 - s0));
    }
    if (ks.empty()) return 0.0;
    std::sort(ks.begin(), ks.end());
    return ks[ks.size() / 2];
}

// Removes insignificant max/min wiggles: repeatedly drop the adjacent pair
// whose swing is below the prominence fraction of the local modulation.
// Pair removal preserves alternation.
inline void prune_candidates(std::vector<Candidate>& c, double prominence) {
    for (;;) {
        if (c.size() < 2) return;
        std::size_t weakest = 0;
        double weakest_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j + 1 < c.size(); ++j) {
            const double swing = std::abs(c[j].value - c[j + 1].value);
            double local = swing;
            if (j > 0) local = std::max(local, std::abs(c[j - 1].value - c[j].value));
            if (j + 2 < c.size())
                local = std::max(local, std::abs(c[j + 1].value - c[j + 2].value));
            if (local <= 0.0) continue;
            const double ratio = swing / local;
            if (ratio < weakest_ratio) {
                weakest_ratio = ratio;
                weakest = j;
            }
        }
        if (weakest_ratio >= prominence) return;
        c.erase(c.begin() + static_cast<std::ptrdiff_t>(weakest),
                c.begin() + static_cast<std::ptrdiff_t>(weakest) + 2);
    }
}

} // namespace detail

// Extrema of the fringe profile with half-integer order assignment.
//
// Pipeline: count-weighted smoothing; division by a Gaussian envelope (width
// seeded by envelope_radius, then refitted through the midline of adjacent
// extremum pairs); full fringe normalization (D - mid)/amp with the local
// fringe amplitude fitted through the extremum-pair half-swings. The
// normalization matters: the fringe amplitude decays with radius, which drags
// extrema of mid + amp*cos(psi) away from the stationary points of psi;
// normalizing leaves plain cos(psi). Extrema are then re-detected, pruned by
// prominence, and refined sub-bin by a synchronous cosine fit (3-point
// parabola as fallback). Orders count outward from the innermost extremum
// (innermost minimum = 0.5, maximum = 1); a constant order offset is absorbed
// by the fitted phi'.
inline ExtremaSet find_extrema(const RadialProfile& profile, double envelope_radius,
                               const AnalysisParams& params = {}) {
    if (envelope_radius <= 0.0)
        throw DomainError("find_extrema: envelope radius must be positive");
    if (profile.radii.size() < 8)
        throw FitError("find_extrema: profile too short");

    // Usable region: non-empty bins out to 1.25 envelope radii, where the
    // fringe modulation still dominates shot noise.
    std::vector<double> radii, raw;
    std::vector<double> weights;
    const double r_cut = 1.25 * envelope_radius;
    for (std::size_t b = 0; b < profile.radii.size(); ++b) {
        if (profile.counts_per_bin[b] <= 0) continue;
        if (profile.radii[b] > r_cut) break;
        radii.push_back(profile.radii[b]);
        raw.push_back(profile.mean_intensity[b]);
        weights.push_back(static_cast<double>(profile.counts_per_bin[b]));
    }
    const std::size_t n = radii.size();
    if (n < 8) throw FitError("find_extrema: too few usable bins inside the envelope");

    // Count-weighted moving average.
    const int hw = std::max(0, params.smooth_halfwidth);
    std::vector<double> smooth(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0, wacc = 0.0;
        const std::size_t lo = (i >= static_cast<std::size_t>(hw)) ? i - hw : 0;
        const std::size_t hi = std::min(n - 1, i + static_cast<std::size_t>(hw));
        for (std::size_t j = lo; j <= hi; ++j) {
            acc += weights[j] * raw[j];
            wacc += weights[j];
        }
        smooth[i] = acc / wacc;
    }

    auto detect = [&](const std::vector<double>& series) {
        std::vector<detail::Candidate> c = detail::derivative_sign_changes(series);
        detail::prune_candidates(c, params.prominence);
        return c;
    };

    // Envelope model exp(log_amp + curvature rho^2), seeded by the camera
    // envelope and refined below.
    double env_log_amp = 0.0;
    double env_curvature = -2.0 / (envelope_radius * envelope_radius);
    auto detrend = [&](const std::vector<double>& src) {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = src[i] / std::exp(env_log_amp + env_curvature * radii[i] * radii[i]);
        return out;
    };

    std::vector<double> detrended = detrend(smooth);
    std::vector<detail::Candidate> cands = detect(detrended);

    // Envelope refinement through extremum-pair midlines: the arithmetic mean
    // of an adjacent max/min pair cancels the fringe term to first order, so
    // the midlines trace the residual envelope exp(c0 + c1 rho^2).
    if (cands.size() >= 3) {
        std::vector<double> xs, ys;
        for (std::size_t j = 0; j + 1 < cands.size(); ++j) {
            const double mid_val = 0.5 * (cands[j].value + cands[j + 1].value);
            if (mid_val <= 0.0) continue;
            const double mid_rho =
                0.5 * (radii[cands[j].index] + radii[cands[j + 1].index]);
            xs.push_back(mid_rho * mid_rho);
            ys.push_back(std::log(mid_val));
        }
        if (xs.size() >= 2) {
            try {
                const detail::LineFit env = detail::weighted_line_fit(xs, ys, {});
                env_log_amp += env.intercept;
                env_curvature += env.slope;
                detrended = detrend(smooth);
                cands = detect(detrended);
            } catch (const FitError&) {
                // keep the seeded envelope
            }
        }
    }

    // Fringe normalization: mid(rho) and the log of the local fringe
    // amplitude are fitted as linear functions of rho^2 through the pair
    // midlines and half-swings.
    std::vector<double> series = detrended;
    std::size_t lo_idx = 0, hi_idx = n;
    if (cands.size() >= 3) {
        std::vector<double> xs, mid_ys, amp_ys;
        for (std::size_t j = 0; j + 1 < cands.size(); ++j) {
            const double mid_val = 0.5 * (cands[j].value + cands[j + 1].value);
            const double amp_val = 0.5 * std::abs(cands[j].value - cands[j + 1].value);
            if (amp_val <= 0.0) continue;
            const double mid_rho =
                0.5 * (radii[cands[j].index] + radii[cands[j + 1].index]);
            xs.push_back(mid_rho * mid_rho);
            mid_ys.push_back(mid_val);
            amp_ys.push_back(std::log(amp_val));
        }
        if (xs.size() >= 2) {
            try {
                const detail::LineFit mid_fit = detail::weighted_line_fit(xs, mid_ys, {});
                const detail::LineFit amp_fit = detail::weighted_line_fit(xs, amp_ys, {});
                std::vector<double> normalized(n);
                double amp_max = 0.0;
                std::vector<double> amps(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const double r2 = radii[i] * radii[i];
                    amps[i] = std::exp(amp_fit.intercept + amp_fit.slope * r2);
                    amp_max = std::max(amp_max, amps[i]);
                }
                // Normalize the raw (envelope-divided) bins, not the
                // boxcar-smoothed ones: a boxcar in rho phase-distorts the
                // rho^2 chirp and drags extrema outward with radius.
                const std::vector<double> detrended_raw = detrend(raw);
                for (std::size_t i = 0; i < n; ++i) {
                    const double r2 = radii[i] * radii[i];
                    normalized[i] =
                        (detrended_raw[i] - (mid_fit.intercept + mid_fit.slope * r2)) /
                        amps[i];
                }

                // Noise suppression that preserves the chirp phase: average
                // with the d(rho^2) Jacobian (weight rho_j) over a window
                // symmetric in bin index. In s = rho^2 this is a uniform
                // average over an interval offset by a constant, which only
                // shifts phi'. The window shrinks where the locally estimated
                // fringe wavenumber would make it span near a half period.
                const double kappa_hat = detail::median_wavenumber(cands, radii);
                const double bin = radii[1] - radii[0];
                std::vector<double> resmoothed(normalized);
                if (hw > 0) {
                    for (std::size_t i = 0; i < n; ++i) {
                        int hw_eff = hw;
                        if (kappa_hat > 0.0) {
                            const double limit =
                                0.75 / (kappa_hat * radii[i] * bin); // s-halfwidth 1.5/kappa
                            hw_eff = std::min(hw_eff, static_cast<int>(limit));
                        }
                        double acc = 0.0, wacc = 0.0;
                        const std::size_t lo =
                            (i >= static_cast<std::size_t>(hw_eff)) ? i - hw_eff : 0;
                        const std::size_t hi = std::min(n - 1, i + static_cast<std::size_t>(hw_eff));
                        for (std::size_t j = lo; j <= hi; ++j) {
                            acc += radii[j] * normalized[j];
                            wacc += radii[j];
                        }
                        resmoothed[i] = acc / wacc;
                    }
                }

                // Where the fitted amplitude collapses, 1/amp amplifies noise
                // into fake extrema; restrict to the trustworthy span.
                while (hi_idx > lo_idx && amps[hi_idx - 1] < 0.03 * amp_max) --hi_idx;
                while (lo_idx < hi_idx && amps[lo_idx] < 0.03 * amp_max) ++lo_idx;
                if (hi_idx - lo_idx >= 8) {
                    series.assign(resmoothed.begin() + lo_idx, resmoothed.begin() + hi_idx);
                    cands = detect(series);
                    for (auto& c : cands) c.index += lo_idx;
                } else {
                    lo_idx = 0;
                    hi_idx = n;
                }
            } catch (const FitError&) {
                lo_idx = 0;
                hi_idx = n;
            }
        }
    }

    // Extrema hugging the region ends see a truncated smoothing window and
    // bias outward; drop them from both ends (the middle keeps alternating).
    {
        const std::size_t margin = static_cast<std::size_t>(hw) + 1;
        while (!cands.empty() && cands.front().index < lo_idx + margin)
            cands.erase(cands.begin());
        while (!cands.empty() && cands.back().index + margin >= hi_idx)
            cands.pop_back();
    }

    if (cands.size() < 3)
        throw FitError("find_extrema: fewer than 3 fringe extrema (insufficient fringes)");
    for (std::size_t j = 0; j + 1 < cands.size(); ++j)
        if (cands[j].is_max == cands[j + 1].is_max)
            throw FitError("find_extrema: ambiguous non-alternating extrema");

    const double bin_width = radii.size() > 1 ? radii[1] - radii[0] : 0.0;
    const double kappa_refine = detail::median_wavenumber(cands, radii);

    // Sub-bin refinement by a synchronous cosine fit in s around each
    // extremum: N ~ P cos(kappa u) + Q sin(kappa u) with u = s - s_bin over
    // a +- quarter-period window. Unlike a 3-point parabola this stays
    // unbiased when a period covers only a few bins.
    auto refine_radius = [&](const detail::Candidate& c) {
        const double rho_bin = radii[c.index];
        const double s_bin = rho_bin * rho_bin;
        const auto parabola = [&]() {
            double rho = rho_bin;
            if (c.index > lo_idx && c.index + 1 < hi_idx) {
                const double vm = series[c.index - 1 - lo_idx];
                const double v0 = series[c.index - lo_idx];
                const double vp = series[c.index + 1 - lo_idx];
                const double denom = vm - 2.0 * v0 + vp;
                if (std::abs(denom) > 0.0) {
                    const double shift =
                        std::clamp(0.5 * (vm - vp) / denom, -0.5, 0.5);
                    rho += shift * bin_width;
                }
            }
            return rho;
        };
        if (kappa_refine <= 0.0) return parabola();

        double scc = 0.0, scs = 0.0, sss = 0.0, scn = 0.0, ssn = 0.0;
        int points = 0;
        for (std::size_t j = lo_idx; j < hi_idx; ++j) {
            const double u = radii[j] * radii[j] - s_bin;
            const double phase = kappa_refine * u;
            if (std::abs(phase) > 1.6) continue; // just over a quarter period
            const double cu = std::cos(phase), su = std::sin(phase);
            const double v = series[j - lo_idx];
            scc += cu * cu;
            scs += cu * su;
            sss += su * su;
            scn += cu * v;
            ssn += su * v;
            ++points;
        }
        if (points < 3) return parabola();
        const double det = scc * sss - scs * scs;
        if (std::abs(det) < 1e-12 * std::max(scc * sss, 1.0)) return parabola();
        const double p = (sss * scn - scs * ssn) / det;
        const double q = (scc * ssn - scs * scn) / det;
        double theta = std::atan2(q, p); // phase of the fit at u = 0
        if (!c.is_max) theta = std::remainder(theta + std::numbers::pi,
                                              2.0 * std::numbers::pi);
        const double u_star = theta / kappa_refine;
        if (std::abs(u_star) > 0.75 * std::numbers::pi / kappa_refine)
            return parabola();
        const double s_star = s_bin + u_star;
        if (s_star <= 0.0) return parabola();
        return std::sqrt(s_star);
    };

    ExtremaSet set;
    double order = cands.front().is_max ? 1.0 : 0.5;
    for (const auto& c : cands) {
        Extremum e;
        e.kind = c.is_max ? ExtremumKind::maximum : ExtremumKind::minimum;
        e.order = order;
        order += 0.5;
        e.uncertainty = bin_width;
        e.radius = refine_radius(c);
        set.entries.push_back(e);
    }
    return set;
}

// ---------------------------------------------------------------------------
// Order-condition fit and wavelength regression
// ---------------------------------------------------------------------------

// Weighted linear least squares of n against rho^2 for n = a rho^2 + phi'.
// Radius uncertainties propagate to sigma(rho^2) = 2 rho sigma and, through a
// first-pass slope, to effective order uncertainties.
inline ParabolicFit fit_parabola(const ExtremaSet& ex) {
    const std::size_t n = ex.entries.size();
    if (n < 3) throw FitError("fit_parabola: need at least 3 extrema");
    std::vector<double> x(n), y(n), sx(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double rho = ex.entries[i].radius;
        x[i] = rho * rho;
        y[i] = ex.entries[i].order;
        sx[i] = 2.0 * rho * ex.entries[i].uncertainty;
    }
    const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
    if (*xmax - *xmin <= 1e-12 * std::max(*xmax, 1e-300))
        throw FitError("fit_parabola: degenerate design matrix (all radii equal)");

    const detail::LineFit pass1 = detail::weighted_line_fit(x, y, {});
    std::vector<double> sigma_y;
    bool usable_sigmas = pass1.slope != 0.0;
    for (std::size_t i = 0; i < n && usable_sigmas; ++i)
        usable_sigmas = sx[i] > 0.0 && std::isfinite(sx[i]);
    if (usable_sigmas) {
        sigma_y.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            sigma_y[i] = std::abs(pass1.slope) * sx[i];
    }
    const detail::LineFit fit = detail::weighted_line_fit(x, y, sigma_y);

    ParabolicFit out;
    out.a = fit.slope;
    out.phi_prime = fit.intercept;
    out.covariance = fit.covariance;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.slope * x[i] + fit.intercept);
        rss += r * r;
    }
    out.residual_rms = std::sqrt(rss / static_cast<double>(n));
    return out;
}

// Weighted regression of the quadratic coefficients a on the propagation
// distance d with a free intercept; the slope m gives
// lambda_eq = 1 / (2 f_c^2 m). The intercept is reported as a pipeline
// diagnostic and should be consistent with zero.
inline WavelengthEstimate fit_equivalent_wavelength(
    const std::vector<std::pair<double, ParabolicFit>>& pairs, double f_c) {
    if (f_c <= 0.0) throw DomainError("fit_equivalent_wavelength: f_c must be positive");
    if (pairs.size() < 2)
        throw FitError("fit_equivalent_wavelength: need at least 2 propagation distances");
    std::vector<double> d(pairs.size()), a(pairs.size()), sigma(pairs.size());
    bool weighted = true;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        d[i] = pairs[i].first;
        a[i] = pairs[i].second.a;
        const double var = pairs[i].second.covariance[0][0];
        sigma[i] = (var > 0.0) ? std::sqrt(var) : 0.0;
        if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i])) weighted = false;
    }
    const auto [dmin, dmax] = std::minmax_element(d.begin(), d.end());
    if (*dmax - *dmin <= 1e-12 * std::max(std::abs(*dmax), 1e-300))
        throw FitError("fit_equivalent_wavelength: all propagation distances equal");

    detail::LineFit fit;
    try {
        fit = detail::weighted_line_fit(d, a, weighted ? sigma : std::vector<double>{});
    } catch (const FitError&) {
        throw FitError("fit_equivalent_wavelength: regression failed");
    }
    if (!(fit.slope > 0.0))
        throw FitError("fit_equivalent_wavelength: unphysical nonpositive slope");

    WavelengthEstimate est;
    est.slope = {fit.slope, fit.slope_sigma};
    est.intercept = {fit.intercept, fit.intercept_sigma};
    est.lambda_eq = 1.0 / (2.0 * f_c * f_c * fit.slope);
    est.sigma = est.lambda_eq * fit.slope_sigma / fit.slope;
    return est;
}

inline const char* to_string(ExtremumKind k) {
    return k == ExtremumKind::maximum ? "max" : "min";
}

} // namespace icfringe

#endif
