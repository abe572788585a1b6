// Command-line front end: simulate fringe images, analyze them back to an
// equivalent-wavelength estimate, sweep propagation distances, and check the
// displaced-lens/free-space kernel equivalence.

#include <CLI11.hpp>

#include <algorithm>
#include <clocale>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "icfringe/analysis.hpp"
#include "icfringe/config.hpp"
#include "icfringe/csv.hpp"
#include "icfringe/imaging.hpp"
#include "icfringe/optics.hpp"

namespace fs = std::filesystem;
using namespace icfringe;

namespace {

std::string format_num(double v) { return detail::format_g(v); }

RunConfig load_config(const std::string& config_flag) {
    if (!config_flag.empty()) return parse_config(config_flag);
    if (const char* env = std::getenv("ICFRINGE_CONFIG"); env && *env)
        return parse_config(env);
    return RunConfig{};
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string item =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError(flag + ": cannot parse '" + item + "' as a number");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

AnalysisParams analysis_params_for(const RunConfig& cfg, const FringeImage& img) {
    AnalysisParams p = cfg.analysis();
    if (cfg.bin_width_um <= 0.0) p.bin_width = img.camera.pixel_pitch;
    return p;
}

std::string frame_name(const IdlerTransfer& transfer, std::optional<std::uint64_t> seed) {
    std::string name = "frame";
    switch (transfer.phase_kind) {
    case PhaseKind::defocus:
        name += "_d" + format_num(transfer.defocus_distance * 1e3) + "mm";
        break;
    case PhaseKind::tilt:
        name += "_tilt";
        break;
    case PhaseKind::uniform:
        name += "_uniform";
        break;
    case PhaseKind::custom:
        name += "_custom";
        break;
    }
    name += "_phi" + format_num(transfer.phi0 * 180.0 / std::numbers::pi) + "deg";
    if (seed) name += "_seed" + std::to_string(*seed);
    return name + ".pgm";
}

struct FrameAnalysis {
    double d = 0.0; // meters
    ExtremaSet extrema;
    ParabolicFit fit;
};

FrameAnalysis analyze_frame(const RunConfig& cfg, const FringeImage& img, double d) {
    const AnalysisParams params = analysis_params_for(cfg, img);
    const Vec2 center = estimate_center(img, params);
    const RadialProfile profile = radial_profile(img, center, params.bin_width);
    FrameAnalysis out;
    out.d = d;
    out.extrema = find_extrema(profile, img.camera.envelope_radius, params);
    out.fit = fit_parabola(out.extrema);
    return out;
}

void write_analysis_outputs(const std::vector<FrameAnalysis>& frames, double f_c,
                            double lambda_theory, const fs::path& out_dir,
                            bool require_estimate, int& exit_code) {
    std::vector<ExtremaRow> extrema_rows;
    std::vector<FitRow> fit_rows;
    std::vector<std::pair<double, ParabolicFit>> pairs;
    for (const auto& f : frames) {
        for (const auto& e : f.extrema.entries) extrema_rows.push_back({f.d * 1e3, e});
        fit_rows.push_back({f.d * 1e3, f.fit});
        pairs.emplace_back(f.d, f.fit);
    }
    write_extrema_csv(extrema_rows, out_dir / "extrema.csv");
    write_fits_csv(fit_rows, out_dir / "fits.csv");
    std::printf("wrote %s\n", (out_dir / "extrema.csv").c_str());
    std::printf("wrote %s\n", (out_dir / "fits.csv").c_str());

    std::string summary;
    summary += "frames analyzed: " + std::to_string(frames.size()) + "\n";
    for (const auto& f : frames)
        summary += "  d = " + format_num(f.d * 1e3) +
                   " mm: a = " + format_num(f.fit.a) +
                   " 1/m^2, phi' = " + format_num(f.fit.phi_prime) +
                   ", residual rms = " + format_num(f.fit.residual_rms) + "\n";

    try {
        const WavelengthEstimate est = fit_equivalent_wavelength(pairs, f_c);
        write_estimate_csv(est, out_dir / "estimate.csv");
        std::printf("wrote %s\n", (out_dir / "estimate.csv").c_str());
        summary += "lambda_eq estimate: " + format_num(est.lambda_eq * 1e9) + " nm +- " +
                   format_num(est.sigma * 1e9) + " nm\n";
        summary += "lambda_eq theory (lambda_s^2/lambda_i): " +
                   format_num(lambda_theory * 1e9) + " nm\n";
        summary += "estimate/theory: " + format_num(est.lambda_eq / lambda_theory) + "\n";
        summary += "slope: " + format_num(est.slope.value) + " +- " +
                   format_num(est.slope.sigma) + " 1/m^3\n";
        summary += "intercept: " + format_num(est.intercept.value) + " +- " +
                   format_num(est.intercept.sigma) + " 1/m^2\n";
    } catch (const Error& e) {
        summary += std::string("wavelength estimate unavailable: ") + e.what() + "\n";
        if (require_estimate) {
            std::fprintf(stderr, "error: %s\n", e.what());
            exit_code = 1;
        }
    }
    detail::atomic_write(out_dir / "summary.txt", summary);
    std::printf("wrote %s\n", (out_dir / "summary.txt").c_str());
    std::fputs(summary.c_str(), stdout);
}

int cmd_simulate(const RunConfig& cfg_in, const std::string& phase_scan_deg) {
    RunConfig cfg = cfg_in;
    const OpticalConfig optical = cfg.optical();
    const CameraModel camera = cfg.camera();
    const JointAmplitude amplitude = cfg.amplitude();
    const IdlerTransfer transfer = cfg.transfer();

    std::vector<double> phis = {transfer.phi0};
    if (!phase_scan_deg.empty()) {
        phis.clear();
        for (double deg : parse_list(phase_scan_deg, "--phase-scan"))
            phis.push_back(deg * std::numbers::pi / 180.0);
    }

    const fs::path out_dir = cfg.output_dir;
    fs::create_directories(out_dir);

    for (double phi0 : phis) {
        IdlerTransfer t = transfer;
        t.phi0 = phi0;
        FringeImage img =
            render_image(optical, amplitude, t, camera, std::nullopt, cfg.points_per_axis);
        if (cfg.seed) img = add_shot_noise(img, *cfg.seed);
        const fs::path path = out_dir / frame_name(t, cfg.seed);
        write_image(img, path);
        std::printf("wrote %s\n", path.c_str());
        std::printf("wrote %s.meta\n", path.c_str());
    }
    return 0;
}

int cmd_analyze(const RunConfig& cfg, const std::vector<std::string>& inputs,
                const std::string& d_mm_list) {
    std::vector<fs::path> files;
    for (const auto& input : inputs) {
        if (fs::is_directory(input)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::directory_iterator(input))
                if (entry.path().extension() == ".pgm") found.push_back(entry.path());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(input);
        }
    }
    if (files.empty()) {
        std::fprintf(stderr, "error: no input images\n");
        return 1;
    }

    std::vector<double> d_override;
    if (!d_mm_list.empty()) {
        d_override = parse_list(d_mm_list, "--d-mm");
        if (d_override.size() != files.size()) {
            std::fprintf(stderr, "error: --d-mm needs one value per image (%zu images)\n",
                         files.size());
            return 1;
        }
    }

    const fs::path out_dir = cfg.output_dir;
    fs::create_directories(out_dir);

    int exit_code = 0;
    std::vector<FrameAnalysis> frames;
    for (std::size_t i = 0; i < files.size(); ++i) {
        try {
            const FringeImage img = read_image(files[i]);
            double d = 0.0;
            if (!d_override.empty()) {
                d = d_override[i] * 1e-3;
            } else if (auto it = img.metadata.find("d_mm"); it != img.metadata.end()) {
                d = std::stod(it->second) * 1e-3;
            } else {
                throw IoError(files[i].string() +
                              ": no d_mm in metadata (use --d-mm to supply it)");
            }
            frames.push_back(analyze_frame(cfg, img, d));
            std::printf("analyzed %s (d = %s mm, %zu extrema)\n", files[i].c_str(),
                        format_num(d * 1e3).c_str(),
                        frames.back().extrema.entries.size());
        } catch (const std::exception& e) {
            std::fprintf(stderr, "warning: skipping %s: %s\n", files[i].c_str(), e.what());
        }
    }
    if (frames.empty()) {
        std::fprintf(stderr, "error: no usable images\n");
        return 1;
    }
    std::set<double> distinct;
    for (const auto& f : frames) distinct.insert(f.d);
    if (distinct.size() < 2) exit_code = 1;

    const OpticalConfig optical = cfg.optical();
    write_analysis_outputs(frames, optical.f_c, equivalent_wavelength(optical), out_dir,
                           true, exit_code);
    return exit_code;
}

int cmd_sweep(const RunConfig& cfg, const std::string& d_mm_list) {
    const std::vector<double> d_mm = parse_list(d_mm_list, "--d-mm");
    if (d_mm.size() < 2) {
        std::fprintf(stderr, "error: sweep needs at least 2 propagation distances\n");
        return 2;
    }
    const OpticalConfig optical = cfg.optical();
    const CameraModel camera = cfg.camera();
    const JointAmplitude amplitude = cfg.amplitude();

    const fs::path out_dir = cfg.output_dir;
    fs::create_directories(out_dir);

    int exit_code = 0;
    std::vector<FrameAnalysis> frames;
    for (double dm : d_mm) {
        const double d = dm * 1e-3;
        IdlerTransfer transfer = defocus_transfer(d, cfg.phi0_rad, cfg.transmission);
        FringeImage img = render_image(optical, amplitude, transfer, camera, std::nullopt,
                                       cfg.points_per_axis);
        if (cfg.seed) img = add_shot_noise(img, *cfg.seed);
        const fs::path path = out_dir / frame_name(transfer, cfg.seed);
        write_image(img, path);
        std::printf("wrote %s\n", path.c_str());

        const AnalysisParams params = analysis_params_for(cfg, img);
        const Vec2 center = estimate_center(img, params);
        const RadialProfile profile = radial_profile(img, center, params.bin_width);
        write_profile_csv(profile,
                          out_dir / ("profile_d" + format_num(dm) + "mm.csv"));

        FrameAnalysis fa;
        fa.d = d;
        fa.extrema = find_extrema(profile, img.camera.envelope_radius, params);
        fa.fit = fit_parabola(fa.extrema);
        frames.push_back(std::move(fa));
    }
    write_analysis_outputs(frames, optical.f_c, equivalent_wavelength(optical), out_dir,
                           true, exit_code);
    return exit_code;
}

int cmd_equivalence(const RunConfig& cfg, const std::string& delta_mm_list,
                    double f_idler_mm, double waist_um) {
    std::vector<double> deltas_mm;
    if (!delta_mm_list.empty()) {
        deltas_mm = parse_list(delta_mm_list, "--delta-mm");
    } else {
        // Defaults span ratios delta^2/f^2 from 1e-4 through 0.5.
        for (double ratio : {1e-4, 0.01, 0.02, 0.04, 0.06, 0.1, 0.2, 0.35, 0.5})
            deltas_mm.push_back(std::sqrt(ratio) * f_idler_mm);
    }
    const double f = f_idler_mm * 1e-3;
    const double w0 = waist_um * 1e-6;
    const double k = 2.0 * std::numbers::pi / (cfg.lambda_i_nm * 1e-9);
    const double extent = 20.0 * w0; // waist stays a tenth of the grid

    const fs::path out_dir = cfg.output_dir;
    fs::create_directories(out_dir);

    int exit_code = 0;
    std::string csv = "delta_mm,ratio,mismatch\n";
    std::printf("# delta_mm    ratio      mismatch\n");
    for (double dm : deltas_mm) {
        const double delta = dm * 1e-3;
        if (delta == 0.0) {
            std::fprintf(stderr, "error: delta must be nonzero\n");
            return 1;
        }
        try {
            const DefocusDistance dd = defocus_to_distance(delta, f);
            // Pick the coarsest grid that keeps both kernels unaliased.
            const double chirp = std::min(std::abs(delta), std::abs(dd.distance));
            std::size_t n = 512;
            while (n < 4096 &&
                   (k / chirp) * (extent / 2.0) * (extent / (n - 1.0)) >= 0.9 * std::numbers::pi)
                n *= 2;
            const ComplexField1D u0 = gaussian_field(w0, extent, n);
            const double mismatch =
                field_mismatch(displaced_lens_field(u0, delta, f, k),
                               fresnel_propagate(u0, dd.distance, k));
            csv += format_num(dm) + "," + format_num(dd.validity_ratio) + "," +
                   format_num(mismatch) + "\n";
            std::printf("%10s %10s %10s\n", format_num(dm).c_str(),
                        format_num(dd.validity_ratio).c_str(),
                        format_num(mismatch).c_str());
            if (dd.validity_ratio <= 0.06 && mismatch >= 0.05) {
                std::fprintf(stderr,
                             "error: mismatch %s at ratio %s breaks the < 0.05 bound\n",
                             format_num(mismatch).c_str(),
                             format_num(dd.validity_ratio).c_str());
                exit_code = 1;
            }
        } catch (const Error& e) {
            std::fprintf(stderr, "error at delta = %s mm: %s\n", format_num(dm).c_str(),
                         e.what());
            exit_code = 1;
        }
    }
    detail::atomic_write(out_dir / "equivalence.csv", csv);
    std::printf("wrote %s\n", (out_dir / "equivalence.csv").c_str());
    return exit_code;
}

} // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_ALL, "C");
    CLI::App app{"Two-crystal induced-coherence fringe simulator and analyzer"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path,
                   "Run configuration file (default: $ICFRINGE_CONFIG if set)");

    std::string output_dir;
    std::optional<std::uint64_t> seed_flag;
    bool noise_free = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--output-dir", output_dir, "Output directory");
        sub->add_option("--seed", seed_flag, "Shot-noise seed (enables Poisson noise)");
        sub->add_flag("--noise-free", noise_free, "Disable shot noise");
    };

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Render fringe frames");
    add_common(simulate);
    std::string phase_scan, d_mm_single, transmission_flag;
    simulate->add_option("--d-mm", d_mm_single, "Defocus propagation distance in mm");
    simulate->add_option("--phase-scan", phase_scan,
                         "Comma list of interferometric phases in degrees");
    simulate->add_option("--transmission", transmission_flag,
                         "Idler amplitude transmission in [0,1]");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Analyze fringe images to lambda_eq");
    add_common(analyze);
    std::vector<std::string> analyze_inputs;
    std::string analyze_d_list;
    analyze->add_option("inputs", analyze_inputs, "Image files or a directory")
        ->required();
    analyze->add_option("--d-mm", analyze_d_list,
                        "Comma list overriding per-image propagation distances (mm)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Simulate and analyze a distance sweep");
    add_common(sweep);
    std::string sweep_d_list;
    sweep->add_option("--d-mm", sweep_d_list, "Comma list of propagation distances (mm)")
        ->required();

    // equivalence
    auto* equivalence =
        app.add_subcommand("equivalence", "Displaced-lens vs free-space kernel check");
    add_common(equivalence);
    std::string delta_list;
    double f_idler_mm = 100.0, waist_um = 100.0;
    equivalence->add_option("--delta-mm", delta_list, "Comma list of lens displacements (mm)");
    equivalence->add_option("--f-idler-mm", f_idler_mm, "Idler lens focal length (mm)");
    equivalence->add_option("--waist-um", waist_um, "Test beam waist (um)");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        if (seed_flag) cfg.seed = *seed_flag;
        if (noise_free) cfg.seed.reset();

        if (simulate->parsed()) {
            if (!d_mm_single.empty()) {
                const std::vector<double> values = parse_list(d_mm_single, "--d-mm");
                if (values.size() != 1)
                    throw ConfigError("simulate takes a single --d-mm value; use sweep "
                                      "for several distances");
                cfg.transfer_kind = "defocus";
                cfg.d_mm = values.front();
            }
            if (!transmission_flag.empty())
                cfg.transmission = parse_list(transmission_flag, "--transmission").at(0);
            return cmd_simulate(cfg, phase_scan);
        }
        if (analyze->parsed()) return cmd_analyze(cfg, analyze_inputs, analyze_d_list);
        if (sweep->parsed()) return cmd_sweep(cfg, sweep_d_list);
        if (equivalence->parsed())
            return cmd_equivalence(cfg, delta_list, f_idler_mm, waist_um);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
