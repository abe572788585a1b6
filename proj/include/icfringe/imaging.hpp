#ifndef ICFRINGE_IMAGING_HPP
#define ICFRINGE_IMAGING_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "icfringe/biphoton.hpp"
#include "icfringe/errors.hpp"
#include "icfringe/fsio.hpp"
#include "icfringe/optics.hpp"
#include "icfringe/rng.hpp"

namespace icfringe {

struct CameraModel {
    int width_px = 512;
    int height_px = 512;
    double pixel_pitch = 20e-6;     // meters
    Vec2 center_px{255.5, 255.5};   // optical-axis pixel, possibly fractional
    double envelope_radius = 2.5e-3; // 1/e^2 radius of the beam envelope, meters
    double exposure_counts = 4000.0; // mean counts at envelope center per frame
};

inline void validate_camera(const CameraModel& cam) {
    if (cam.width_px < 64 || cam.height_px < 64)
        throw DomainError("CameraModel: sensor must be at least 64x64 pixels");
    if (cam.pixel_pitch <= 0.0) throw DomainError("CameraModel: pixel pitch must be positive");
    if (cam.envelope_radius <= 0.0)
        throw DomainError("CameraModel: envelope radius must be positive");
    if (cam.exposure_counts < 0.0)
        throw DomainError("CameraModel: exposure counts must be >= 0");
}

inline CameraModel default_camera() { return CameraModel{}; }

// Camera frame: nonnegative intensities in row-major order plus the
// generation parameters that produced it.
struct FringeImage {
    std::vector<double> intensities; // height_px * width_px, row-major
    CameraModel camera;
    std::map<std::string, std::string> metadata;

    double& at(int row, int col) { return intensities[static_cast<std::size_t>(row) * camera.width_px + col]; }
    double at(int row, int col) const { return intensities[static_cast<std::size_t>(row) * camera.width_px + col]; }
    std::size_t pixel_count() const { return intensities.size(); }
};

namespace detail {

inline double envelope_at(const CameraModel& cam, double rho) {
    const double r = rho / cam.envelope_radius;
    return std::exp(-2.0 * r * r);
}

} // namespace detail

// Renders the noise-free camera frame for one interferometer setting. Each
// pixel at camera position r detects the signal mode q_s = (2 pi / lambda_s)
// (r - center) / f_c; the pixel value is
//   exposure_counts * envelope(|r - center|) * I(q_s) / I_ref,
// where I_ref = 2 W(0) is the mode intensity a fully transmitting, uniformly
// constructive configuration would give on axis, so a visibility-1 bright
// frame peaks at exposure_counts.
//
// base_window overrides the per-mode integration window (required for custom
// amplitudes, which have no default). points_per_axis sets the quadrature
// resolution of the built-in windows.
inline FringeImage render_image(const OpticalConfig& cfg, const JointAmplitude& amp,
                                const IdlerTransfer& transfer, const CameraModel& cam,
                                std::optional<MomentumWindow> base_window = std::nullopt,
                                int points_per_axis = 129) {
    validate_camera(cam);
    validate_transfer(transfer);

    // Paraxial field-of-view guard at the sensor corners.
    {
        double r_max = 0.0;
        for (int cx : {0, cam.width_px - 1})
            for (int cy : {0, cam.height_px - 1}) {
                const double dx = (cx - cam.center_px.x) * cam.pixel_pitch;
                const double dy = (cy - cam.center_px.y) * cam.pixel_pitch;
                r_max = std::max(r_max, std::hypot(dx, dy));
            }
        const double theta_i = (r_max / cfg.f_c) * cfg.lambda_i / cfg.lambda_s;
        if (theta_i >= kParaxialLimitRad)
            throw DomainError("render_image: camera field of view exceeds the paraxial bound");
    }

    FringeImage img;
    img.camera = cam;
    img.intensities.assign(static_cast<std::size_t>(cam.width_px) * cam.height_px, 0.0);

    const double q_per_m = cfg.k_signal() / cfg.f_c; // q_s per camera-plane meter
    const double t = transfer.transmission;
    const Complex phase0 = std::polar(1.0, transfer.phi0);

    const bool fast = amp.separable_axes() && transfer.phase_kind != PhaseKind::custom;
    if (fast) {
        const MomentumWindow w0 = base_window ? *base_window
                                              : default_momentum_window(amp, Vec2{0.0, 0.0},
                                                                        points_per_axis);
        const bool track_qs = amp.kind == AmplitudeKind::correlated_gaussian && !base_window;

        auto axis_for = [&](int axis, double qs_a) {
            const double center_a = track_qs ? -qs_a
                                             : (axis == 0 ? w0.center.x : w0.center.y);
            return detail::axis_integrals(amp, transfer, cfg, axis, qs_a, center_a,
                                          w0.halfwidth, w0.points_per_axis);
        };

        std::vector<detail::AxisIntegrals> col(cam.width_px), row(cam.height_px);
        for (int c = 0; c < cam.width_px; ++c)
            col[c] = axis_for(0, (c - cam.center_px.x) * cam.pixel_pitch * q_per_m);
        for (int r = 0; r < cam.height_px; ++r)
            row[r] = axis_for(1, (r - cam.center_px.y) * cam.pixel_pitch * q_per_m);

        // Per-axis truncation check; axes with an underflowed peak render as
        // dark pixels rather than failing.
        double worst_ratio = 0.0, best_peak = 0.0;
        for (const auto& axes : {std::cref(col), std::cref(row)})
            for (const auto& a : axes.get()) {
                best_peak = std::max(best_peak, a.peak);
                if (a.peak > 0.0) worst_ratio = std::max(worst_ratio, a.edge / a.peak);
            }
        if (!(best_peak > 0.0))
            throw DomainError("render_image: amplitude has no support inside the window");
        if (worst_ratio > 1e-3)
            throw SamplingError("render_image: integration window truncates the amplitude");

        const detail::AxisIntegrals ax0 = axis_for(0, 0.0);
        const detail::AxisIntegrals ay0 = axis_for(1, 0.0);
        const double i_ref = 2.0 * ax0.w * ay0.w;
        if (!(i_ref > 0.0))
            throw DomainError("render_image: degenerate on-axis reference intensity");

        for (int r = 0; r < cam.height_px; ++r) {
            const double y = (r - cam.center_px.y) * cam.pixel_pitch;
            for (int c = 0; c < cam.width_px; ++c) {
                const double x = (c - cam.center_px.x) * cam.pixel_pitch;
                const double w = col[c].w * row[r].w;
                const Complex z = t * phase0 * col[c].z * row[r].z;
                const double mode = w + z.real();
                img.at(r, c) = cam.exposure_counts *
                               detail::envelope_at(cam, std::hypot(x, y)) * mode / i_ref;
            }
        }
    } else {
        if (!base_window)
            throw DomainError("render_image: custom amplitude or phase needs an explicit window");
        const MomentumWindow& win = *base_window;
        auto mode_integrals = [&](const Vec2& q_s, double& w_out, Complex& z_out) {
            const int n = win.points_per_axis;
            const double step = 2.0 * win.halfwidth / static_cast<double>(n - 1);
            const double area = step * step;
            w_out = 0.0;
            z_out = Complex(0.0, 0.0);
            for (int jx = 0; jx < n; ++jx) {
                const double qx = win.center.x - win.halfwidth + step * jx;
                for (int jy = 0; jy < n; ++jy) {
                    const double qy = win.center.y - win.halfwidth + step * jy;
                    const Vec2 q_i{qx, qy};
                    const double dens = amp.density(q_s, q_i);
                    w_out += dens * area;
                    z_out += dens * t *
                             std::polar(1.0, transfer_phase(transfer, q_i, cfg)) * area;
                }
            }
        };
        double w0 = 0.0;
        Complex z0;
        mode_integrals(Vec2{0.0, 0.0}, w0, z0);
        if (!(w0 > 0.0)) throw DomainError("render_image: degenerate on-axis reference intensity");
        const double i_ref = 2.0 * w0;
        for (int r = 0; r < cam.height_px; ++r) {
            const double y = (r - cam.center_px.y) * cam.pixel_pitch;
            for (int c = 0; c < cam.width_px; ++c) {
                const double x = (c - cam.center_px.x) * cam.pixel_pitch;
                const Vec2 q_s{x * q_per_m, y * q_per_m};
                double w = 0.0;
                Complex z;
                mode_integrals(q_s, w, z);
                img.at(r, c) = cam.exposure_counts *
                               detail::envelope_at(cam, std::hypot(x, y)) * (w + z.real()) / i_ref;
            }
        }
    }

    img.metadata["phi0_rad"] = detail::format_double(transfer.phi0);
    img.metadata["transmission"] = detail::format_double(transfer.transmission);
    img.metadata["lambda_s_nm"] = detail::format_double(cfg.lambda_s * 1e9);
    img.metadata["lambda_i_nm"] = detail::format_double(cfg.lambda_i * 1e9);
    img.metadata["lambda_p_nm"] = detail::format_double(cfg.lambda_p * 1e9);
    img.metadata["f_c_mm"] = detail::format_double(cfg.f_c * 1e3);
    img.metadata["noise"] = "none";
    switch (transfer.phase_kind) {
    case PhaseKind::uniform:
        img.metadata["transfer"] = "uniform";
        break;
    case PhaseKind::tilt:
        img.metadata["transfer"] = "tilt";
        img.metadata["tilt_sx_mm"] = detail::format_double(transfer.tilt_gradient.x * 1e3);
        img.metadata["tilt_sy_mm"] = detail::format_double(transfer.tilt_gradient.y * 1e3);
        break;
    case PhaseKind::defocus:
        img.metadata["transfer"] = "defocus";
        img.metadata["d_mm"] = detail::format_double(transfer.defocus_distance * 1e3);
        break;
    case PhaseKind::custom:
        img.metadata["transfer"] = "custom";
        break;
    }
    switch (amp.kind) {
    case AmplitudeKind::correlated_gaussian:
        img.metadata["amplitude"] = "correlated_gaussian";
        img.metadata["pump_waist_um"] = detail::format_double(amp.pump_waist * 1e6);
        break;
    case AmplitudeKind::separable_gaussian:
        img.metadata["amplitude"] = "separable_gaussian";
        img.metadata["signal_width_per_mm"] = detail::format_double(amp.signal_width * 1e-3);
        img.metadata["idler_width_per_mm"] = detail::format_double(amp.idler_width * 1e-3);
        break;
    case AmplitudeKind::custom:
        img.metadata["amplitude"] = "custom";
        break;
    }
    return img;
}

// Poisson shot noise, deterministic for a given seed. Each pixel draws from
// its own seeded stream.
inline FringeImage add_shot_noise(const FringeImage& img, std::uint64_t seed) {
    FringeImage out = img;
    for (std::size_t i = 0; i < out.intensities.size(); ++i) {
        SplitMix64 stream = pixel_stream(seed, static_cast<std::uint64_t>(i));
        out.intensities[i] = static_cast<double>(poisson_sample(img.intensities[i], stream));
    }
    out.metadata["noise"] = "poisson";
    out.metadata["seed"] = std::to_string(seed);
    return out;
}

// One frame per interferometric phase offset, identical otherwise.
inline std::vector<FringeImage> phase_scan(const OpticalConfig& cfg, const JointAmplitude& amp,
                                           const IdlerTransfer& transfer, const CameraModel& cam,
                                           const std::vector<double>& phi0_values,
                                           std::optional<MomentumWindow> base_window = std::nullopt,
                                           int points_per_axis = 129) {
    std::vector<FringeImage> frames;
    frames.reserve(phi0_values.size());
    for (double phi0 : phi0_values) {
        IdlerTransfer t = transfer;
        t.phi0 = phi0;
        frames.push_back(render_image(cfg, amp, t, cam, base_window, points_per_axis));
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Image file format: 16-bit binary PGM plus a text sidecar
// ---------------------------------------------------------------------------
//
// <image>.pgm   "P5\n<width> <height>\n65535\n" followed by width*height
//               big-endian 16-bit samples, row 0 first. Samples are the
//               intensities max-normalized to 65535.
// <image>.meta  "key = value" lines ('#' starts a comment). Holds the
//               quantization scale (intensity_scale), the camera geometry and
//               the generation parameters.

inline void write_image(const FringeImage& img, const std::filesystem::path& path) {
    validate_camera(img.camera);
    if (img.intensities.size() !=
        static_cast<std::size_t>(img.camera.width_px) * img.camera.height_px)
        throw DomainError("write_image: intensity buffer does not match camera dimensions");

    double vmax = 0.0;
    for (double v : img.intensities) {
        if (v < 0.0) throw DomainError("write_image: negative intensity");
        vmax = std::max(vmax, v);
    }
    const double scale = (vmax > 0.0) ? vmax : 1.0;

    std::string bytes;
    bytes.reserve(32 + img.intensities.size() * 2);
    bytes += "P5\n" + std::to_string(img.camera.width_px) + " " +
             std::to_string(img.camera.height_px) + "\n65535\n";
    for (double v : img.intensities) {
        const auto u = static_cast<std::uint16_t>(std::lround(v / scale * 65535.0));
        bytes.push_back(static_cast<char>(u >> 8));
        bytes.push_back(static_cast<char>(u & 0xFF));
    }
    detail::atomic_write(path, bytes);

    std::map<std::string, std::string> meta = img.metadata;
    meta["intensity_scale"] = detail::format_double(scale);
    meta["pixel_pitch_um"] = detail::format_double(img.camera.pixel_pitch * 1e6);
    meta["center_x_px"] = detail::format_double(img.camera.center_px.x);
    meta["center_y_px"] = detail::format_double(img.camera.center_px.y);
    meta["envelope_radius_mm"] = detail::format_double(img.camera.envelope_radius * 1e3);
    meta["exposure_counts"] = detail::format_double(img.camera.exposure_counts);

    std::string text = "# fringe image metadata\n";
    for (const auto& [k, v] : meta) text += k + " = " + v + "\n";
    detail::atomic_write(path.string() + ".meta", text);
}

namespace detail {

inline double parse_meta_double(const std::map<std::string, std::string>& meta,
                                const std::string& key, const std::string& path) {
    auto it = meta.find(key);
    if (it == meta.end())
        throw IoError(path + ".meta: missing required key '" + key + "'");
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw IoError(path + ".meta: cannot parse value of '" + key + "'");
    }
}

} // namespace detail

inline FringeImage read_image(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open image: " + path.string());
    std::string content((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

    // Header: magic, dimensions, maxval, each terminated by one whitespace.
    std::size_t pos = 0;
    auto next_token = [&](const char* what) {
        while (pos < content.size() && std::isspace(static_cast<unsigned char>(content[pos])))
            ++pos;
        const std::size_t start = pos;
        while (pos < content.size() && !std::isspace(static_cast<unsigned char>(content[pos])))
            ++pos;
        if (start == pos)
            throw IoError(path.string() + ": truncated header, expected " + std::string(what) +
                          " at byte " + std::to_string(start));
        return content.substr(start, pos - start);
    };
    if (next_token("magic") != "P5")
        throw IoError(path.string() + ": not a binary PGM (magic != P5)");
    int width = 0, height = 0;
    long maxval = 0;
    try {
        width = std::stoi(next_token("width"));
        height = std::stoi(next_token("height"));
        maxval = std::stol(next_token("maxval"));
    } catch (const std::exception&) {
        throw IoError(path.string() + ": malformed header dimensions");
    }
    if (width <= 0 || height <= 0)
        throw IoError(path.string() + ": nonpositive image dimensions");
    if (maxval != 65535)
        throw IoError(path.string() + ": expected 16-bit samples (maxval 65535)");
    if (pos >= content.size())
        throw IoError(path.string() + ": truncated after header");
    ++pos; // single whitespace after maxval
    const std::size_t expected = static_cast<std::size_t>(width) * height * 2;
    if (content.size() - pos < expected)
        throw IoError(path.string() + ": truncated pixel data at byte " + std::to_string(pos) +
                      " (have " + std::to_string(content.size() - pos) + " of " +
                      std::to_string(expected) + " bytes)");

    // Sidecar.
    const std::string meta_path = path.string() + ".meta";
    std::ifstream ms(meta_path);
    if (!ms) throw IoError("cannot open sidecar: " + meta_path);
    std::map<std::string, std::string> meta;
    std::string line;
    int lineno = 0;
    while (std::getline(ms, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw IoError(meta_path + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw IoError(meta_path + ":" + std::to_string(lineno) + ": empty key");
        meta[key] = value;
    }

    FringeImage img;
    img.camera.width_px = width;
    img.camera.height_px = height;
    img.camera.pixel_pitch = detail::parse_meta_double(meta, "pixel_pitch_um", path.string()) * 1e-6;
    img.camera.center_px.x = detail::parse_meta_double(meta, "center_x_px", path.string());
    img.camera.center_px.y = detail::parse_meta_double(meta, "center_y_px", path.string());
    img.camera.envelope_radius =
        detail::parse_meta_double(meta, "envelope_radius_mm", path.string()) * 1e-3;
    img.camera.exposure_counts =
        detail::parse_meta_double(meta, "exposure_counts", path.string());
    const double scale = detail::parse_meta_double(meta, "intensity_scale", path.string());
    for (const char* consumed : {"intensity_scale", "pixel_pitch_um", "center_x_px",
                                 "center_y_px", "envelope_radius_mm", "exposure_counts"})
        meta.erase(consumed);
    img.metadata = std::move(meta);

    img.intensities.resize(static_cast<std::size_t>(width) * height);
    for (std::size_t i = 0; i < img.intensities.size(); ++i) {
        const auto hi = static_cast<unsigned char>(content[pos + 2 * i]);
        const auto lo = static_cast<unsigned char>(content[pos + 2 * i + 1]);
        img.intensities[i] = static_cast<double>((hi << 8) | lo) / 65535.0 * scale;
    }
    return img;
}

} // namespace icfringe

#endif
