// End-to-end exercises of the installed CLI binary. The binary path arrives
// as the first command-line argument (wired up by CMake).

#define CATCH_AMALGAMATED_CUSTOM_MAIN
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "icfringe/imaging.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_binary;

int run_cli(const std::string& args) {
    const std::string cmd = cli_binary + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "icfringe_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)),
                       std::istreambuf_iterator<char>());
}

int count_files(const fs::path& dir, const std::string& ext) {
    int n = 0;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ext) ++n;
    return n;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <path-to-icfringe-binary> [catch args]\n");
        return 2;
    }
    cli_binary = argv[1];
    Catch::Session session;
    return session.run(argc - 1, argv + 1);
}

TEST_CASE("simulate writes a frame with its sidecar") {
    const fs::path dir = fresh_dir("simulate");
    REQUIRE(run_cli("simulate --d-mm 17 --noise-free --output-dir " + dir.string()) == 0);
    CHECK(count_files(dir, ".pgm") == 1);
    CHECK(count_files(dir, ".meta") == 1);

    const auto img = icfringe::read_image(dir / "frame_d17mm_phi0deg.pgm");
    CHECK(img.metadata.at("d_mm") == "17");
    CHECK(img.metadata.at("noise") == "none");
}

TEST_CASE("simulate runs a phase scan") {
    const fs::path dir = fresh_dir("scan");
    REQUIRE(run_cli("simulate --phase-scan 0,90,180,270 --noise-free --output-dir " +
                    dir.string()) == 0);
    CHECK(count_files(dir, ".pgm") == 4);
}

TEST_CASE("blocked idler leaves a fringe-free frame") {
    const fs::path dir = fresh_dir("blocked");
    REQUIRE(run_cli("simulate --d-mm 17 --transmission 0 --noise-free --output-dir " +
                    dir.string()) == 0);
    const auto img = icfringe::read_image(dir / "frame_d17mm_phi0deg.pgm");

    // Compare opposite-radius pairs along a diameter: without fringes the
    // profile is the bare envelope, monotone in radius.
    const auto& cam = img.camera;
    double worst = 0.0;
    for (int c = 100; c < 412; ++c) {
        const double x = (c - cam.center_px.x) * cam.pixel_pitch;
        const double rho = std::abs(x);
        const double env = std::exp(-2.0 * rho * rho /
                                    (cam.envelope_radius * cam.envelope_radius));
        const double expected = cam.exposure_counts / 2.0 * env;
        worst = std::max(worst, std::abs(img.at(255, c) - expected) / cam.exposure_counts);
    }
    CHECK(worst < 1e-3); // quantization-level residual only
}

TEST_CASE("sweep recovers the equivalent wavelength and is deterministic") {
    const fs::path dir1 = fresh_dir("sweep1");
    const fs::path dir2 = fresh_dir("sweep2");
    const std::string args = "sweep --d-mm 9,13,17 --seed 7 --output-dir ";
    REQUIRE(run_cli(args + dir1.string()) == 0);
    REQUIRE(run_cli(args + dir2.string()) == 0);

    for (const char* name : {"extrema.csv", "fits.csv", "estimate.csv", "summary.txt",
                             "frame_d9mm_phi0deg_seed7.pgm",
                             "frame_d13mm_phi0deg_seed7.pgm",
                             "frame_d17mm_phi0deg_seed7.pgm"}) {
        INFO(name);
        const std::string a = slurp(dir1 / name);
        REQUIRE_FALSE(a.empty());
        CHECK(a == slurp(dir2 / name));
    }

    // lambda_eq lands near theory (within the paper-like few-percent band).
    const std::string estimate = slurp(dir1 / "estimate.csv");
    const double lambda_eq = std::stod(estimate.substr(estimate.find('\n') + 1));
    CHECK(std::abs(lambda_eq - 423.29e-9) / 423.29e-9 < 0.03);
}

TEST_CASE("noise-free sweep lands within 1% of theory") {
    const fs::path dir = fresh_dir("sweep_clean");
    REQUIRE(run_cli("sweep --d-mm 9,13,17 --noise-free --output-dir " + dir.string()) ==
            0);
    const std::string estimate = slurp(dir / "estimate.csv");
    const double lambda_eq = std::stod(estimate.substr(estimate.find('\n') + 1));
    CHECK(std::abs(lambda_eq - 423.29e-9) / 423.29e-9 < 0.01);
}

TEST_CASE("sweep refuses a single distance") {
    const fs::path dir = fresh_dir("sweep_short");
    CHECK(run_cli("sweep --d-mm 13 --noise-free --output-dir " + dir.string()) != 0);
}

TEST_CASE("analyze consumes simulate output and skips corrupt files") {
    const fs::path dir = fresh_dir("analyze");
    REQUIRE(run_cli("simulate --d-mm 9 --noise-free --output-dir " + dir.string()) == 0);
    REQUIRE(run_cli("simulate --d-mm 17 --noise-free --output-dir " + dir.string()) == 0);

    // Plant a corrupt image; analyze must warn and continue.
    std::ofstream(dir / "corrupt.pgm") << "P5\n10 10\n65535\nxx";
    const fs::path out = fresh_dir("analyze_out");
    REQUIRE(run_cli("analyze " + dir.string() + " --output-dir " + out.string()) == 0);
    CHECK(fs::exists(out / "extrema.csv"));
    CHECK(fs::exists(out / "fits.csv"));
    CHECK(fs::exists(out / "estimate.csv"));
    CHECK(fs::exists(out / "summary.txt"));

    const std::string extrema = slurp(out / "extrema.csv");
    CHECK(extrema.rfind("d_mm,n,kind,rho_m,sigma_m\n", 0) == 0);
    const std::string fits = slurp(out / "fits.csv");
    CHECK(fits.rfind("d_mm,a_per_m2,phi_prime,residual_rms\n", 0) == 0);
    const std::string estimate = slurp(out / "estimate.csv");
    CHECK(estimate.rfind("lambda_eq_m,sigma_m,slope,intercept\n", 0) == 0);
}

TEST_CASE("analyze accepts per-file --d-mm overrides") {
    const fs::path dir = fresh_dir("analyze_override");
    REQUIRE(run_cli("simulate --d-mm 9 --noise-free --output-dir " + dir.string()) == 0);
    REQUIRE(run_cli("simulate --d-mm 17 --noise-free --output-dir " + dir.string()) == 0);
    const fs::path out = fresh_dir("analyze_override_out");
    // Directory listing is sorted: frame_d17... precedes frame_d9...
    REQUIRE(run_cli("analyze " + dir.string() + " --d-mm 17,9 --output-dir " +
                    out.string()) == 0);
    const std::string estimate = slurp(out / "estimate.csv");
    const double lambda_eq = std::stod(estimate.substr(estimate.find('\n') + 1));
    CHECK(std::abs(lambda_eq - 423.29e-9) / 423.29e-9 < 0.02);

    // A count mismatch is rejected.
    CHECK(run_cli("analyze " + dir.string() + " --d-mm 17 --output-dir " +
                  out.string()) != 0);
}

TEST_CASE("analyze with one image writes partial outputs and fails the estimate") {
    const fs::path dir = fresh_dir("analyze_single");
    REQUIRE(run_cli("simulate --d-mm 13 --noise-free --output-dir " + dir.string()) == 0);
    const fs::path out = fresh_dir("analyze_single_out");
    CHECK(run_cli("analyze " + dir.string() + " --output-dir " + out.string()) != 0);
    CHECK(fs::exists(out / "extrema.csv"));
    CHECK(fs::exists(out / "fits.csv"));
    CHECK_FALSE(fs::exists(out / "estimate.csv"));
}

TEST_CASE("equivalence emits the mismatch table and holds the bound") {
    const fs::path dir = fresh_dir("equivalence");
    REQUIRE(run_cli("equivalence --output-dir " + dir.string()) == 0);
    const std::string csv = slurp(dir / "equivalence.csv");
    REQUIRE(csv.rfind("delta_mm,ratio,mismatch\n", 0) == 0);

    // Parse rows: mismatch < 0.05 whenever ratio <= 0.06, nondecreasing overall.
    double prev = -1.0;
    std::size_t pos = csv.find('\n') + 1;
    int rows = 0;
    while (pos < csv.size()) {
        const std::size_t end = csv.find('\n', pos);
        const std::string line = csv.substr(pos, end - pos);
        const std::size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
        const double ratio = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        const double mismatch = std::stod(line.substr(c2 + 1));
        if (ratio <= 0.06) CHECK(mismatch < 0.05);
        CHECK(mismatch >= prev);
        prev = mismatch;
        ++rows;
        if (end == std::string::npos) break;
        pos = end + 1;
    }
    CHECK(rows == 9);
}

TEST_CASE("ICFRINGE_CONFIG supplies the default configuration") {
    const fs::path dir = fresh_dir("envcfg");
    std::ofstream(dir / "env.cfg") << "transfer.d_mm = 11\n";
    const std::string cmd = "ICFRINGE_CONFIG=" + (dir / "env.cfg").string() + " " +
                            cli_binary + " simulate --noise-free --output-dir " +
                            dir.string() + " > /dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(dir / "frame_d11mm_phi0deg.pgm"));
}

TEST_CASE("a bad config is rejected with a line number") {
    const fs::path dir = fresh_dir("badcfg");
    std::ofstream(dir / "bad.cfg") << "optical.lambda_p_nm = 600\n";
    const std::string cmd = cli_binary + " --config " + (dir / "bad.cfg").string() +
                            " simulate --noise-free --output-dir " + dir.string() +
                            " 2> " + (dir / "err.txt").string();
    CHECK(std::system(cmd.c_str()) != 0);
    const std::string err = slurp(dir / "err.txt");
    CHECK(err.find("bad.cfg:1") != std::string::npos);
}
