// acceptance: runs criteria 1-10 and prints one PASS/FAIL line for each
//
// Exit status is 0 only when every criterion passes. Lines starting with two
// spaces are diagnostics. TCL4_FIG4_REFERENCES may name a directory of
// cell_<i>_<j>.csv reference traces for the Drude (θ, T) grid.

#include "tcl4/benchmark.hpp"
#include "tcl4/commands.hpp"
#include "tcl4/config.hpp"
#include "tcl4/generators.hpp"
#include "tcl4/oracle.hpp"
#include "tcl4/parallel.hpp"
#include "tcl4/propagation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

using namespace tcl4;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

using clock_type = std::chrono::steady_clock;

double since(clock_type::time_point t0) { return std::chrono::duration<double>(clock_type::now() - t0).count(); }

std::string preset(const std::string& name) { return std::string(TCL4_SOURCE_DIR) + "/presets/" + name; }

int failures = 0;

void verdict(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("criterion %2d %s  %s: %s\n", id, pass ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void note(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void note(const char* fmt, ...) {
    std::printf("  ");
    va_list ap;
    va_start(ap, fmt);
    std::vprintf(fmt, ap);
    va_end(ap);
    std::printf("\n");
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

SpectralDensity drude(double T) {
    SpectralDensity sd;
    sd.cutoff = Cutoff::drude;
    sd.coupling = 1.0;
    sd.omega_c = 10.0;
    sd.temperature = T;
    return sd;
}

// max_j ‖a_j − b_j‖_F / max_j ‖b_j‖_F
double series_relative(const std::vector<Mat4>& a, const std::vector<Mat4>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        num = std::max(num, (a[j] - b[j]).norm());
        den = std::max(den, b[j].norm());
    }
    return num / den;
}

struct PresetRun {
    std::string name;
    RunConfig cfg;
    SimulationResult sim;
    std::optional<BenchmarkResult> sweep;
};

void criterion1() {
    const auto t0 = clock_type::now();
    SweepConfig sc;
    sc.bath = drude(1.0);
    sc.thetas = {pi / 2};
    sc.temperatures = {1.0, 10.0, 20.0};
    const BenchmarkResult res = sweep(sc);
    double max24 = 0.0;
    bool ok = true;
    for (const auto& c : res.cells) {
        ok = ok && c.ok;
        max24 = std::max(max24, c.max_24);
    }

    // ρ0(π/2) carries no coherence; the dephasing factor is read off the probe ½[[1,1],[1,1]]
    Mat2 probe;
    probe << 0.5, 0.5, 0.5, 0.5;
    const SystemModel sys = SystemModel::from_theta(pi / 2);
    const std::size_t n = 1500;
    double coh = 0.0;
    for (std::size_t k = 0; k < sc.temperatures.size(); ++k) {
        const double T = sc.temperatures[k];
        const BathTables tabs = bath_tables(drude(T), 0.01, n, required_frequencies(sys, 2));
        const Trajectory tr = propagate(generator_series(sys, tabs.gamma, n, 2), probe);
        double worst = 0.0;
        for (std::size_t j = 0; j <= n; j += 10) {
            const cplx exact = 0.5 * pure_dephasing_coherence(drude(T), tr.times[j]);
            worst = std::max(worst, std::abs(std::abs(tr.states[j](0, 1)) - std::abs(exact)));
        }
        note("T = %g: max |TCL2 - TCL4| trace distance %.2e, coherence error %.2e", T,
             res.cells[k].max_24, worst);
        coh = std::max(coh, worst);
    }
    const double secs = since(t0);
    verdict(1, "pure dephasing", ok && max24 <= 1e-8 && coh <= 1e-3 && secs <= 30.0,
            fmt("max trace distance %.2e (<= 1e-8), coherence error %.2e (<= 1e-3), %.1f s (<= 30 s)", max24, coh,
                secs));
}

void criterion2(const BenchmarkResult& res, double secs) {
    const std::size_t nt = res.thetas.size(), nT = res.temperatures.size();
    std::size_t below = 0, imax = 0, jmax = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < nt; ++i) {
        std::string row;
        for (std::size_t j = 0; j < nT; ++j) {
            const double r = res.cells[i * nT + j].norm_ratio;
            row += fmt(" %.4f", r);
            if (r < 0.1) ++below;
            if (r > best) best = r, imax = i, jmax = j;
        }
        note("theta = %.4f:%s", res.thetas[i], row.c_str());
    }
    const double frac = double(below) / double(nt * nT);
    const bool corner = (imax == 0 || imax == nt - 1) && (jmax == 0 || jmax == nT - 1);
    verdict(2, "norm ratio", frac >= 0.8 && corner && secs <= 600.0,
            fmt("%.0f%% of cells below 0.1 (>= 80%%), max %.4f at theta = %.4f, T = %g (%s), %.1f s", 100 * frac,
                best, res.thetas[imax], res.temperatures[jmax], corner ? "corner" : "not a corner", secs));
}

void criterion3() {
    double worst2 = 0.0, worst4 = 0.0;
    const std::size_t n = 1500;
    for (Cutoff cut : {Cutoff::drude, Cutoff::exponential})
        for (double theta : {0.0, pi / 4, 9 * pi / 20}) {
            const SystemModel sys = SystemModel::from_theta(theta);
            SpectralDensity sd = drude(2.0);
            sd.cutoff = cut;
            const BathTables base = bath_tables(sd, 0.01, n, required_frequencies(sys, 4), 1 << 17);
            const GeneratorSeries g1 = generator_series(sys, base.gamma, n, 4);
            for (double s : {0.3, 2.5}) {
                SpectralDensity scaled = sd;
                scaled.coupling = s;
                const BathTables tabs = bath_tables(scaled, 0.01, n, required_frequencies(sys, 4), 1 << 17);
                const GeneratorSeries gs = generator_series(sys, tabs.gamma, n, 4);
                std::vector<Mat4> l2s, l4s;
                for (std::size_t j = 0; j <= n; ++j) {
                    l2s.push_back(s * g1.l2[j]);
                    l4s.push_back(s * s * g1.l4[j]);
                }
                worst2 = std::max(worst2, series_relative(gs.l2, l2s));
                worst4 = std::max(worst4, series_relative(gs.l4, l4s));
            }
        }
    verdict(3, "homogeneity", worst2 <= 1e-12 && worst4 <= 1e-12,
            fmt("L2 vs s L2 %.2e, L4 vs s^2 L4 %.2e (each <= 1e-12)", worst2, worst4));
}

void criteria4and5() {
    const auto t0 = clock_type::now();
    const RunConfig cfg = load_config(preset("oracle.cfg"));
    const auto cells = oracle_validation(cfg);
    const double secs = since(t0);
    bool ok4 = secs <= 600.0;
    std::string d4;
    for (const auto& c : cells) {
        const double l4 = c.l4_error.at(c.selected);
        const bool good = c.l2_error <= 0.01 && l4 <= 0.05 && std::abs(c.exponent_tcl2 - 2.0) <= 0.5 &&
                          std::abs(c.exponent_tcl4 - 3.0) <= 0.5;
        ok4 = ok4 && good;
        d4 += fmt("theta = %.4f: l2 %.2e, l4 %.2e (%s), exponents %.2f / %.2f; ", c.theta, c.l2_error, l4,
                  to_string(c.selected).c_str(), c.exponent_tcl2, c.exponent_tcl4);
        for (const auto& [r, e] : c.l4_error) note("theta = %.4f reading %s: l4 error %.3e", c.theta, to_string(r).c_str(), e);
        note("theta = %.4f: truncation error %.2e, max fit residual %.2e", c.theta, c.truncation_error,
             c.max_fit_residual);
    }
    verdict(4, "oracle orders", ok4, d4 + fmt("%.1f s (<= 600 s)", secs));

    // rescale the bath so that ‖L4‖/‖L2‖ at t_max sits near 0.075
    const TimeGrid grid{cfg.grid.dt, std::size_t(std::llround(cfg.oracle.t_max / cfg.grid.dt))};
    bool ok5 = true;
    std::string d5;
    for (const auto& c : cells) {
        const double s = 0.075 / c.norm_ratio;
        const SystemModel sys = SystemModel::from_theta(c.theta);
        const DiscreteBathSpec spec = cfg.oracle_bath(c.temperature).scaled(s);
        const BathTables tabs =
            discrete_bath_functions(spec.modes, c.temperature, grid.dt, grid.n, required_frequencies(sys, 4));
        const Tcl4Integrals ints(tabs.gamma, sys.energies, grid.n, c.selected);
        const GeneratorSeries g2 = generator_series(sys, tabs.gamma, grid.n, 2);
        const GeneratorSeries g4 = generator_series(sys, tabs.gamma, grid.n, 4, &ints);
        const Mat2 rho0 = initial_state(c.theta);
        const Trajectory ex = exact_discrete_bath(sys, spec, rho0, grid);
        const double a2 = time_avg_trace_distance(ex, propagate(g2, rho0), cfg.oracle.t_max);
        const double a4 = time_avg_trace_distance(ex, propagate(g4, rho0), cfg.oracle.t_max);
        const double nr = norm_ratio(g4, grid.n);
        const bool good = nr >= 0.05 && nr <= 0.1 && a2 >= 3.0 * a4;
        ok5 = ok5 && good;
        d5 += fmt("theta = %.4f: norm ratio %.3f, avg distance TCL2 %.2e, TCL4 %.2e, ratio %.1f (>= 3); ", c.theta,
                  nr, a2, a4, a2 / a4);
        note("theta = %.4f: coupling scale %.2f, truncation error %.2e", c.theta, s,
             truncation_error(sys, spec, rho0, grid));
    }

    if (const char* dir = std::getenv("TCL4_FIG4_REFERENCES")) {
        RunConfig f4 = load_config(preset("fig4_drude.cfg"));
        SweepConfig sc = sweep_config(f4);
        sc.reference_dir = dir;
        const BenchmarkResult res = sweep(sc);
        std::size_t checked = 0;
        for (const auto& cell : res.cells) {
            if (!cell.has_reference || cell.temperature != 1.0 || cell.theta > 3 * pi / 8 + 1e-12) continue;
            ++checked;
            const bool good = cell.avg_ref_2 > 0.02 && cell.avg_ref_4 < 0.005;
            ok5 = ok5 && good;
            note("reference theta = %.4f: TCL2 %.4f (> 0.02), TCL4 %.4f (< 0.005)", cell.theta, cell.avg_ref_2,
                 cell.avg_ref_4);
        }
        d5 += fmt("%zu reference cells checked; ", checked);
    } else {
        note("no reference traces supplied (TCL4_FIG4_REFERENCES unset); the oracle ordering is the check");
    }
    verdict(5, "TCL4 improves on TCL2", ok5, d5.substr(0, d5.size() - 2));
}

void criterion6(const BenchmarkResult& res, double secs) {
    const std::size_t nT = res.temperatures.size();
    std::map<double, double> rate;
    std::string row;
    for (std::size_t j = 0; j < nT; ++j) {
        const auto& c = res.cells[j];   // θ = π/20 is the first row
        rate[c.temperature] = c.relaxation_rate_tcl4;
        row += fmt(" T=%g: %.4f", c.temperature, c.relaxation_rate_tcl4);
    }
    note("TCL4 relaxation rates at theta = %.4f:%s", res.thetas[0], row.c_str());
    const bool pass = std::abs(res.thetas[0] - pi / 20) < 1e-12 && rate.count(1.0) && rate.count(2.0) &&
                      rate.count(20.0) && rate[2.0] > rate[1.0] && rate[2.0] > rate[20.0] && secs <= 300.0;
    verdict(6, "relaxation peak", pass,
            fmt("rate(2) %.4f, rate(1) %.4f, rate(20) %.4f, %.1f s (<= 300 s)", rate[2.0], rate[1.0], rate[20.0],
                secs));
}

void criterion7() {
    const RunConfig cfg = load_config(preset("oracle.cfg"));
    const BlochCheck b = bloch_checks(cfg);
    const bool pass = b.first_row_max <= 1e-14 && b.eigenvalue_mismatch <= 1e-10 &&
                      b.zero_coupling_mismatch <= 1e-10 && b.flag_mismatches == 0 && b.flag_samples > 0;
    verdict(7, "Bloch eigenvalues", pass,
            fmt("first row %.1e (<= 1e-14), eigenvalue mismatch %.1e (<= 1e-10), zero coupling %.1e, overdamping "
                "flag %zu/%zu samples agree",
                b.first_row_max, b.eigenvalue_mismatch, b.zero_coupling_mismatch, b.flag_samples - b.flag_mismatches,
                b.flag_samples));
}

void criterion8() {
    const auto t0 = clock_type::now();
    const RunConfig cfg = load_config(preset("bcf_check.cfg"));
    const auto rows = bcf_convergence(cfg);
    const double secs = since(t0);
    const std::map<double, std::vector<double>> table = {{0.1, {1e-2, 1e-3, 1e-5, 1e-7, 1e-9}},
                                                         {1.0, {1e-2, 1e-3, 1e-5, 1e-6, 1e-8}},
                                                         {5.0, {1e-1, 1e-2, 1e-3, 1e-5, 1e-6}}};
    bool monotone = true, decades = true;
    std::size_t k = 0;
    std::string off;
    for (double T : cfg.bcf.temperatures) {
        std::string row;
        for (std::size_t i = 0; i < cfg.bcf.t_n.size(); ++i, ++k) {
            const auto& r = rows[k];
            if (i > 0 && !(r.max_abs_diff < rows[k - 1].max_abs_diff)) monotone = false;
            // the table lists orders of magnitude, so compare exponents
            const double expect = table.at(T).at(i);
            const double order = std::floor(std::log10(r.max_abs_diff));
            const double gap = std::abs(order - std::round(std::log10(expect)));
            if (gap > 1.0) {
                decades = false;
                off += fmt(" T=%g t_N=%g (%.0f decades)", T, r.t_n, gap);
            }
            row += fmt(" %.1e[%.0e]", r.max_abs_diff, expect);
        }
        note("T = %g: measured[table]%s", T, row.c_str());
    }
    verdict(8, "BCF convergence", monotone && decades && secs <= 300.0,
            fmt("%s, %s, %.1f s (<= 300 s)", monotone ? "decreasing in t_N" : "not decreasing in t_N",
                decades ? "all cells within one decade" : ("outside one decade:" + off).c_str(), secs));
}

void criterion9() {
    const RunConfig cfg = load_config(preset("bench.cfg"));
    const BenchReport b = bench_timings(cfg);
    const double r2 = b.tcl2_seconds[1] / b.tcl2_seconds[0];
    const double r4 = b.tcl4_seconds[1] / b.tcl4_seconds[0];
    note("n = %zu: TCL2 %.4f s, TCL4 %.4f s; n = %zu: TCL2 %.4f s, TCL4 %.4f s; %zu worker(s)", b.n[0],
         b.tcl2_seconds[0], b.tcl4_seconds[0], b.n[1], b.tcl2_seconds[1], b.tcl4_seconds[1], worker_count());
    const bool pass = b.n.size() == 2 && b.n[1] == 2 * b.n[0] && std::abs(r4 / 4.0 - 1.0) <= 0.3 &&
                      std::abs(r2 / 2.0 - 1.0) <= 0.3 && b.full_run_seconds <= 60.0;
    verdict(9, "complexity scaling", pass,
            fmt("TCL4 ratio %.2f (4 +- 30%%), TCL2 ratio %.2f (2 +- 30%%), full n = %zu run %.2f s (<= 60 s)", r4,
                r2, b.n.back(), b.full_run_seconds));
}

void criterion10(const std::vector<PresetRun>& runs) {
    double trace = 0.0, herm = 0.0;
    std::size_t trajectories = 0;
    for (const auto& r : runs) {
        trace = std::max(trace, r.sim.max_trace_error);
        herm = std::max(herm, r.sim.max_hermiticity_error);
        ++trajectories;
        if (!r.sweep) continue;
        for (const auto& c : r.sweep->cells) {
            trace = std::max(trace, c.max_trace_error);
            herm = std::max(herm, c.max_hermiticity_error);
            trajectories += 2;
        }
    }
    const bool integrity = trace <= 1e-10 && herm <= 1e-10;

    // RK4 halving ratio on the RK4-stepped trajectory presets (those run by
    // simulate or sweep); the bcf-check, bench and oracle presets are listed only
    bool halving = true;
    std::string ratios;
    for (const auto& r : runs) {
        if (r.cfg.solver.order == 0) continue;
        const bool counted = r.sweep.has_value();
        const double h = r.sim.halving_ratio;
        const bool good = std::abs(h / 16.0 - 1.0) <= 0.5;
        note("%s: halving ratio %.2f (%s cutoff, lambda^2 = %g, T = %g, theta = %.4f)%s", r.name.c_str(), h,
             to_string(r.cfg.spectral_density().cutoff), r.cfg.bath.coupling, r.cfg.bath.temperature,
             r.cfg.model.theta, counted ? "" : ", not a trajectory preset");
        if (!counted) continue;
        halving = halving && good;
        if (!good) ratios += " " + r.name + fmt("=%.1f", h);
    }

    // TCL2 positivity log at T = Ω
    std::size_t at_omega = 0, logged = 0, low_t = 0;
    double first = 0.0;
    for (const auto& r : runs) {
        if (!r.sweep) continue;
        for (const auto& c : r.sweep->cells) {
            if (c.temperature == 1.0) {
                ++at_omega;
                if (c.violation_tcl2) {
                    if (logged == 0) first = c.violation_tcl2->time;
                    ++logged;
                }
            } else if (c.temperature < 1.0 && c.violation_tcl2) {
                ++low_t;
                note("%s: TCL2 violation at T = %g, theta = %.4f, first at t = %.2f (min eig %.2e)", r.name.c_str(),
                     c.temperature, c.theta, c.violation_tcl2->time, c.violation_tcl2->min_eigenvalue);
            }
        }
    }
    note("TCL2 positivity: %zu of %zu cells at T = 1 logged a violation; %zu cells below T = 1 did", logged,
         at_omega, low_t);
    const bool positivity = logged > 0;

    verdict(10, "propagation integrity", integrity && halving && positivity,
            fmt("%zu trajectories, trace %.1e, hermiticity %.1e (<= 1e-10); halving ratio %s; TCL2 violation at "
                "T = 1 %s",
                trajectories, trace, herm, halving ? "within 16 +- 50%" : ("outside 16 +- 50%:" + ratios).c_str(),
                positivity ? fmt("first at t = %.2f", first).c_str() : "never logged"));
}

} // namespace

int main() {
    const auto start = clock_type::now();

    criterion1();

    // every shipped preset: its single trajectory and, when it has one, its sweep
    std::vector<PresetRun> runs;
    std::map<std::string, double> sweep_seconds;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(std::string(TCL4_SOURCE_DIR) + "/presets"))
        if (e.path().extension() == ".cfg") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        PresetRun r;
        r.name = p.stem().string();
        r.cfg = load_config(p.string());
        r.sim = simulate(r.cfg);
        if (r.cfg.sweep) {
            SweepConfig sc = sweep_config(r.cfg);
            if (!sc.reference_dir.empty()) sc.reference_dir = (fs::path(TCL4_SOURCE_DIR) / sc.reference_dir).string();
            const auto t0 = clock_type::now();
            r.sweep = sweep(sc);
            sweep_seconds[r.name] = since(t0);
        }
        runs.push_back(std::move(r));
    }
    auto find = [&](const std::string& name) -> const PresetRun& {
        for (const auto& r : runs)
            if (r.name == name) return r;
        throw std::runtime_error("missing preset " + name);
    };

    criterion2(*find("fig5b_norm_ratio").sweep, sweep_seconds.at("fig5b_norm_ratio"));
    criterion3();
    criteria4and5();
    criterion6(*find("figA1_relaxation").sweep, sweep_seconds.at("figA1_relaxation"));
    criterion7();
    criterion8();
    criterion9();
    criterion10(runs);

    std::printf("%d of 10 criteria failed, %.1f s\n", failures, since(start));
    return failures == 0 ? 0 : 1;
}
