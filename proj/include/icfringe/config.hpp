#ifndef ICFRINGE_CONFIG_HPP
#define ICFRINGE_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>

#include "icfringe/analysis.hpp"
#include "icfringe/biphoton.hpp"
#include "icfringe/errors.hpp"
#include "icfringe/imaging.hpp"
#include "icfringe/optics.hpp"

namespace icfringe {

// Flat `key = value` run configuration with dotted section keys. Every
// physical key carries its unit in the name; values convert to SI on use.
// Unknown keys are rejected with the offending line number.
struct RunConfig {
    // optical.*
    double lambda_s_nm = 810.0;
    double lambda_i_nm = 1550.0;
    double lambda_p_nm = 532.0;
    double f_c_mm = 150.0;
    double f_idler_mm = 100.0;
    double pump_waist_um = 250.0;

    // camera.*
    int width_px = 512;
    int height_px = 512;
    double pixel_pitch_um = 20.0;
    std::optional<double> center_x_px;
    std::optional<double> center_y_px;
    double envelope_radius_mm = 2.5;
    double exposure_counts = 4000.0;

    // transfer.*
    std::string transfer_kind = "defocus"; // uniform | tilt | defocus
    double transmission = 1.0;
    double phi0_rad = 0.0;
    double d_mm = 17.0;
    double tilt_sx_mm = 0.0;
    double tilt_sy_mm = 0.0;

    // amplitude.*
    std::string amplitude_kind = "correlated"; // correlated | separable
    std::optional<double> signal_width_per_mm;
    std::optional<double> idler_width_per_mm;

    // noise.*
    std::optional<std::uint64_t> seed;

    // output.*
    std::string output_dir = "out";

    // analysis.*
    double bin_width_um = 0.0; // 0 = one pixel pitch
    double prominence = 0.05;
    int smooth_halfwidth_bins = 2;
    double center_search_px = 3.0;
    double center_step_px = 0.1;

    // quadrature.*
    int points_per_axis = 129;

    OpticalConfig optical() const {
        return OpticalConfig(lambda_s_nm * 1e-9, lambda_i_nm * 1e-9, lambda_p_nm * 1e-9,
                             f_c_mm * 1e-3, f_idler_mm * 1e-3, pump_waist_um * 1e-6);
    }

    CameraModel camera() const {
        CameraModel cam;
        cam.width_px = width_px;
        cam.height_px = height_px;
        cam.pixel_pitch = pixel_pitch_um * 1e-6;
        cam.center_px.x = center_x_px ? *center_x_px : (width_px - 1) / 2.0;
        cam.center_px.y = center_y_px ? *center_y_px : (height_px - 1) / 2.0;
        cam.envelope_radius = envelope_radius_mm * 1e-3;
        cam.exposure_counts = exposure_counts;
        validate_camera(cam);
        return cam;
    }

    JointAmplitude amplitude() const {
        if (amplitude_kind == "correlated")
            return make_correlated_amplitude(pump_waist_um * 1e-6);
        if (amplitude_kind == "separable") {
            if (!signal_width_per_mm || !idler_width_per_mm)
                throw DomainError("separable amplitude needs amplitude.signal_width_per_mm "
                                  "and amplitude.idler_width_per_mm");
            return make_separable_amplitude(*signal_width_per_mm * 1e3,
                                            *idler_width_per_mm * 1e3);
        }
        throw DomainError("unknown amplitude.kind '" + amplitude_kind + "'");
    }

    IdlerTransfer transfer() const {
        if (transfer_kind == "uniform") return uniform_transfer(phi0_rad, transmission);
        if (transfer_kind == "tilt")
            return tilt_transfer(Vec2{tilt_sx_mm * 1e-3, tilt_sy_mm * 1e-3}, phi0_rad,
                                 transmission);
        if (transfer_kind == "defocus")
            return defocus_transfer(d_mm * 1e-3, phi0_rad, transmission);
        throw DomainError("unknown transfer.kind '" + transfer_kind + "'");
    }

    AnalysisParams analysis() const {
        AnalysisParams p;
        p.bin_width = (bin_width_um > 0.0) ? bin_width_um * 1e-6 : pixel_pitch_um * 1e-6;
        p.prominence = prominence;
        p.smooth_halfwidth = smooth_halfwidth_bins;
        p.center_search_px = center_search_px;
        p.center_step_px = center_step_px;
        return p;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& value, const std::string& key, int line,
               const std::string& source) {
    try {
        std::size_t pos = 0;
        T out;
        if constexpr (std::is_same_v<T, double>) out = std::stod(value, &pos);
        else if constexpr (std::is_same_v<T, int>) out = std::stoi(value, &pos);
        else out = static_cast<T>(std::stoull(value, &pos));
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception&) {
        throw ConfigError(source + ":" + std::to_string(line) + ": cannot parse value '" +
                          value + "' for key '" + key + "'");
    }
}

} // namespace detail

// Parses configuration text. `source` names the origin for error messages.
inline RunConfig parse_config_text(const std::string& text,
                                   const std::string& source = "<config>") {
    RunConfig cfg;
    std::map<std::string, int> key_lines;

    using Setter = std::function<void(const std::string&, int)>;
    std::map<std::string, Setter> setters;
    auto add_double = [&](const std::string& key, double& slot) {
        setters[key] = [&slot, key, &source](const std::string& v, int line) {
            slot = detail::parse_number<double>(v, key, line, source);
        };
    };
    auto add_opt_double = [&](const std::string& key, std::optional<double>& slot) {
        setters[key] = [&slot, key, &source](const std::string& v, int line) {
            slot = detail::parse_number<double>(v, key, line, source);
        };
    };
    auto add_int = [&](const std::string& key, int& slot) {
        setters[key] = [&slot, key, &source](const std::string& v, int line) {
            slot = detail::parse_number<int>(v, key, line, source);
        };
    };
    auto add_string = [&](const std::string& key, std::string& slot) {
        setters[key] = [&slot](const std::string& v, int) { slot = v; };
    };

    add_double("optical.lambda_s_nm", cfg.lambda_s_nm);
    add_double("optical.lambda_i_nm", cfg.lambda_i_nm);
    add_double("optical.lambda_p_nm", cfg.lambda_p_nm);
    add_double("optical.f_c_mm", cfg.f_c_mm);
    add_double("optical.f_idler_mm", cfg.f_idler_mm);
    add_double("optical.pump_waist_um", cfg.pump_waist_um);
    add_int("camera.width_px", cfg.width_px);
    add_int("camera.height_px", cfg.height_px);
    add_double("camera.pixel_pitch_um", cfg.pixel_pitch_um);
    add_opt_double("camera.center_x_px", cfg.center_x_px);
    add_opt_double("camera.center_y_px", cfg.center_y_px);
    add_double("camera.envelope_radius_mm", cfg.envelope_radius_mm);
    add_double("camera.exposure_counts", cfg.exposure_counts);
    add_string("transfer.kind", cfg.transfer_kind);
    add_double("transfer.transmission", cfg.transmission);
    add_double("transfer.phi0_rad", cfg.phi0_rad);
    add_double("transfer.d_mm", cfg.d_mm);
    add_double("transfer.tilt_sx_mm", cfg.tilt_sx_mm);
    add_double("transfer.tilt_sy_mm", cfg.tilt_sy_mm);
    add_string("amplitude.kind", cfg.amplitude_kind);
    add_opt_double("amplitude.signal_width_per_mm", cfg.signal_width_per_mm);
    add_opt_double("amplitude.idler_width_per_mm", cfg.idler_width_per_mm);
    setters["noise.seed"] = [&cfg, &source](const std::string& v, int line) {
        cfg.seed = detail::parse_number<std::uint64_t>(v, "noise.seed", line, source);
    };
    add_string("output.dir", cfg.output_dir);
    add_double("analysis.bin_width_um", cfg.bin_width_um);
    add_double("analysis.prominence", cfg.prominence);
    add_int("analysis.smooth_halfwidth_bins", cfg.smooth_halfwidth_bins);
    add_double("analysis.center_search_px", cfg.center_search_px);
    add_double("analysis.center_step_px", cfg.center_step_px);
    add_int("quadrature.points_per_axis", cfg.points_per_axis);

    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (detail::trim(line).empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end())
            throw ConfigError(source + ":" + std::to_string(lineno) + ": unknown key '" +
                              key + "'");
        if (value.empty())
            throw ConfigError(source + ":" + std::to_string(lineno) + ": empty value for '" +
                              key + "'");
        it->second(value, lineno);
        key_lines[key] = lineno;
    }

    // Cross-key validation, reported with the line of the most relevant key.
    auto where = [&](const std::string& key) {
        auto it = key_lines.find(key);
        return (it != key_lines.end()) ? source + ":" + std::to_string(it->second) + ": "
                                       : source + ": ";
    };
    try {
        cfg.optical();
    } catch (const DomainError& e) {
        throw ConfigError(where("optical.lambda_p_nm") + e.what());
    }
    try {
        cfg.camera();
    } catch (const DomainError& e) {
        throw ConfigError(where("camera.width_px") + e.what());
    }
    try {
        cfg.amplitude();
    } catch (const DomainError& e) {
        throw ConfigError(where("amplitude.kind") + e.what());
    }
    try {
        cfg.transfer();
    } catch (const DomainError& e) {
        throw ConfigError(where("transfer.kind") + e.what());
    }
    if (cfg.points_per_axis < 9)
        throw ConfigError(where("quadrature.points_per_axis") +
                          "quadrature needs at least 9 points per axis");
    if (cfg.prominence <= 0.0 || cfg.prominence >= 1.0)
        throw ConfigError(where("analysis.prominence") + "prominence must lie in (0, 1)");
    return cfg;
}

inline RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return parse_config_text(text, path.string());
}

} // namespace icfringe

#endif
