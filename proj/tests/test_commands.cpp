#include "tcl4/commands.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace tcl4;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / ("tcl4_test_commands_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

RunConfig config(const std::string& text, const fs::path& out) {
    auto c = parse_config(text);
    c.output.dir = out.string();
    return c;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

} // namespace

TEST_CASE("simulate at order 0 keeps the populations") {
    auto dir = scratch("tcl0");
    auto cfg = load_config(std::string(TCL4_SOURCE_DIR) + "/presets/simulate_tcl0.cfg");
    cfg.output.dir = dir.string();
    auto r = simulate(cfg);
    REQUIRE(r.trajectory.size() == 501);
    const Mat2 r0 = initial_state(pi / 4);
    for (const auto& s : r.trajectory.states) {
        CHECK(std::abs(s(0, 0) - r0(0, 0)) < 1e-13);
        CHECK(std::abs(s(1, 1) - r0(1, 1)) < 1e-13);
    }
    CHECK(r.max_trace_error <= 1e-13);

    std::ostringstream log;
    CHECK(run("simulate", cfg, log) == 0);
    CHECK(fs::exists(dir / "trajectory.csv"));
    auto side = read_json(dir / "trajectory.json");
    CHECK(side.at("manifest").at("config_hash") == config_hash(cfg));
    CHECK(side.at("manifest").at("complete") == true);
    CHECK(side.at("order") == 0);
    CHECK(side.at("first_positivity_violation").is_null());
    CHECK(log.str().find("simulate:") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("simulate against a reference written by an earlier run") {
    auto dir = scratch("ref");
    auto cfg = config("[model]\ntheta = pi/4\n[bath]\ncutoff = drude\n[grid]\nt_end = 3\n[solver]\norder = 2\n"
                      "fft_n = 65536\n",
                      dir);
    std::ostringstream log;
    REQUIRE(run("simulate", cfg, log) == 0);
    auto side = read_json(dir / "trajectory.json");
    CHECK(side.at("max_trace_error").get<double>() <= 1e-10);
    CHECK(side.contains("rk4_halving_ratio"));

    cfg.reference.emplace();
    cfg.reference->path = (dir / "trajectory.csv").string();
    auto r = simulate(cfg);
    CHECK(r.has_reference);
    CHECK(r.avg_ref <= 1e-15);
    cfg.output.formats = {"json"};
    cfg.output.dir = (dir / "json_only").string();
    REQUIRE(run("simulate", cfg, log) == 0);
    CHECK_FALSE(fs::exists(dir / "json_only" / "trajectory.csv"));
    CHECK(fs::exists(dir / "json_only" / "trajectory.json"));
    fs::remove_all(dir);
}

TEST_CASE("sweep command writes CSV and JSON with a manifest") {
    auto dir = scratch("sweep");
    auto cfg = config("[bath]\ncutoff = drude\n[grid]\nt_end = 5\n[solver]\nfft_n = 65536\n"
                      "[sweep]\ntheta_list = [0, pi/2]\ntemperature_list = [1]\nt_star = [5]\n",
                      dir);
    auto sc = sweep_config(cfg);
    CHECK(sc.thetas.size() == 2);
    CHECK(sc.t_end == 5.0);
    std::ostringstream log;
    CHECK(run("sweep", cfg, log) == 0);
    auto j = read_json(dir / "sweep.json");
    CHECK(j.at("cells").size() == 2);
    CHECK(j.at("manifest").at("complete") == true);
    CHECK(fs::exists(dir / "sweep.csv"));

    cfg.sweep.reset();
    CHECK_THROWS_AS(sweep_config(cfg), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("sweep with a broken reference is marked incomplete") {
    auto dir = scratch("sweep_bad");
    {
        std::ofstream bad(dir / "cell_0_0.csv");
        bad << "t,rho11_re,rho22_re,rho12_re,rho12_im\n0,0.7,0.7,0,0\n";
    }
    auto cfg = config("[bath]\ncutoff = drude\n[grid]\nt_end = 2\n[solver]\nfft_n = 65536\n"
                      "[sweep]\ntheta_list = [pi/4]\ntemperature_list = [1]\nt_star = [2]\n",
                      dir / "out");
    cfg.reference.emplace();
    cfg.reference->dir = dir.string();
    std::ostringstream log;
    CHECK(run("sweep", cfg, log) == 1);
    CHECK(read_json(dir / "out" / "sweep.json").at("manifest").at("complete") == false);
    CHECK(log.str().find("failed") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("Bloch checks on the oracle preset") {
    auto cfg = load_config(std::string(TCL4_SOURCE_DIR) + "/presets/oracle.cfg");
    cfg.solver.fft_n = 1 << 16;
    auto b = bloch_checks(cfg);
    CHECK(b.first_row_max <= 1e-14);
    CHECK(b.eigenvalue_mismatch <= 1e-10);
    CHECK(b.zero_coupling_mismatch <= 1e-12);
    CHECK(b.flag_samples > 100);
    CHECK(b.flag_mismatches == 0);
    CHECK(b.l2_consistency < 0.05);
    CHECK(b.params.J_plus > 0.0);
}

TEST_CASE("oracle command on a one-mode bath") {
    auto dir = scratch("oracle");
    auto cfg = config("[bath]\nmodes = [[2.2, 0.1]]\n[grid]\ndt = 0.01\n"
                      "[oracle]\nthetas = [pi/4]\ntemperatures = [0]\nfock_cut = 5\nt_max = 3\n",
                      dir);
    auto cells = oracle_validation(cfg);
    REQUIRE(cells.size() == 1);
    const auto& c = cells[0];
    CHECK(c.l2_error <= 0.01);
    CHECK(c.l4_error.size() == 3);
    CHECK(c.times.size() == 301);
    CHECK(c.scales.size() == 3);
    CHECK(c.truncation_error < 1e-3);

    std::ostringstream log;
    run("oracle", cfg, log);
    auto j = read_json(dir / "oracle.json");
    CHECK(j.at("cells").size() == 1);
    CHECK_FALSE(j.contains("eigenvalue_checks"));
    CHECK(j.at("manifest").at("command") == "oracle");
    fs::remove_all(dir);
}

TEST_CASE("BCF convergence in the FFT length") {
    auto dir = scratch("bcf");
    auto cfg = config("[bath]\ncutoff = exponential\n[bcf]\ntemperatures = [1]\nt_n = [5, 50, 500]\n"
                      "t_ref = 5000\nwindow = 5\n",
                      dir);
    auto rows = bcf_convergence(cfg);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].max_abs_diff > rows[1].max_abs_diff);
    CHECK(rows[1].max_abs_diff > rows[2].max_abs_diff);
    std::ostringstream log;
    CHECK(run("bcf-check", cfg, log) == 0);
    CHECK(read_json(dir / "bcf_convergence.json").at("monotone") == true);
    fs::remove_all(dir);
}

TEST_CASE("bench timings") {
    auto cfg = parse_config("[bath]\ncutoff = drude\n[solver]\nfft_n = 65536\n[bench]\nn_list = [100, 200]\n"
                            "repeats = 1\n");
    auto b = bench_timings(cfg);
    REQUIRE(b.tcl2_seconds.size() == 2);
    CHECK(b.tcl4_seconds[1] > b.tcl4_seconds[0]);
    CHECK(b.full_run_seconds > 0.0);
}

TEST_CASE("log-log slope") {
    CHECK(loglog_slope({1, 2, 4}, {3, 12, 48}) == doctest::Approx(2.0));
    CHECK(loglog_slope({0.25, 0.5, 1}, {0.001, 0.008, 0.064}) == doctest::Approx(3.0));
    CHECK_THROWS(loglog_slope({1}, {1}));
}

TEST_CASE("unknown command") {
    std::ostringstream log;
    CHECK_THROWS_WITH(run("plot", parse_config("[bath]\ncutoff = drude\n"), log), doctest::Contains("unknown command"));
}
