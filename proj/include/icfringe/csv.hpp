#ifndef ICFRINGE_CSV_HPP
#define ICFRINGE_CSV_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "icfringe/analysis.hpp"
#include "icfringe/fsio.hpp"

namespace icfringe {

// Stable CSV schemas of the analysis outputs. Columns and headers are part of
// the tool's interface; see README.

struct ExtremaRow {
    double d_mm = 0.0;
    Extremum extremum;
};

inline void write_extrema_csv(const std::vector<ExtremaRow>& rows,
                              const std::filesystem::path& path) {
    std::string text = "d_mm,n,kind,rho_m,sigma_m\n";
    for (const auto& row : rows) {
        text += detail::format_g(row.d_mm);
        text += ",";
        text += detail::format_g(row.extremum.order);
        text += ",";
        text += to_string(row.extremum.kind);
        text += ",";
        text += detail::format_g(row.extremum.radius);
        text += ",";
        text += detail::format_g(row.extremum.uncertainty);
        text += "\n";
    }
    detail::atomic_write(path, text);
}

struct FitRow {
    double d_mm = 0.0;
    ParabolicFit fit;
};

inline void write_fits_csv(const std::vector<FitRow>& rows,
                           const std::filesystem::path& path) {
    std::string text = "d_mm,a_per_m2,phi_prime,residual_rms\n";
    for (const auto& row : rows) {
        text += detail::format_g(row.d_mm);
        text += ",";
        text += detail::format_g(row.fit.a);
        text += ",";
        text += detail::format_g(row.fit.phi_prime);
        text += ",";
        text += detail::format_g(row.fit.residual_rms);
        text += "\n";
    }
    detail::atomic_write(path, text);
}

inline void write_estimate_csv(const WavelengthEstimate& est,
                               const std::filesystem::path& path) {
    std::string text = "lambda_eq_m,sigma_m,slope,intercept\n";
    text += detail::format_g(est.lambda_eq);
    text += ",";
    text += detail::format_g(est.sigma);
    text += ",";
    text += detail::format_g(est.slope.value);
    text += ",";
    text += detail::format_g(est.intercept.value);
    text += "\n";
    detail::atomic_write(path, text);
}

inline void write_profile_csv(const RadialProfile& profile,
                              const std::filesystem::path& path) {
    std::string text = "rho_m,mean_intensity,count\n";
    for (std::size_t b = 0; b < profile.radii.size(); ++b) {
        text += detail::format_g(profile.radii[b]);
        text += ",";
        text += detail::format_g(profile.mean_intensity[b]);
        text += ",";
        text += std::to_string(profile.counts_per_bin[b]);
        text += "\n";
    }
    detail::atomic_write(path, text);
}

} // namespace icfringe

#endif
