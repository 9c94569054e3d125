// commands.cpp: workflows behind the command-line subcommands

#include "tcl4/commands.hpp"
#include "tcl4/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace tcl4 {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

bool wants_csv(const RunConfig& cfg) {
    return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), "csv") != cfg.output.formats.end();
}

std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.output.dir);
    return std::filesystem::path(cfg.output.dir) / name;
}

void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << std::setw(2) << j << '\n';
}

std::ofstream open_csv(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << std::setprecision(17);
    return os;
}

// max_t ‖a − b‖_F / max_t ‖b‖_F, and the per-t numerators over the same scale
double relative_error(const std::vector<Mat4>& a, const std::vector<Mat4>& b, std::size_t n,
                      std::vector<double>* per_t = nullptr) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j <= n; ++j) {
        num = std::max(num, (a[j] - b[j]).norm());
        den = std::max(den, b[j].norm());
    }
    if (per_t) {
        per_t->clear();
        for (std::size_t j = 0; j <= n; ++j) per_t->push_back(den > 0.0 ? (a[j] - b[j]).norm() / den : 0.0);
    }
    return den > 0.0 ? num / den : num;
}

StationaryGamma stationary_from(const GammaTable& gt, double omega) {
    return {gt.asymptotic(-omega), gt.asymptotic(0.0), gt.asymptotic(omega)};
}

nlohmann::json violation_json(const std::optional<PositivityViolation>& v) {
    if (!v) return nullptr;
    return {{"step", v->step}, {"time", v->time}, {"min_eig", v->min_eigenvalue}};
}

} // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more points");
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw std::invalid_argument("loglog_slope: values must be positive");
        mx += std::log(x[k]);
        my += std::log(y[k]);
    }
    mx /= double(x.size());
    my /= double(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
        sxx += (std::log(x[k]) - mx) * (std::log(x[k]) - mx);
    }
    return sxy / sxx;
}

SimulationResult simulate(const RunConfig& cfg) {
    const SystemModel sys = SystemModel::from_theta(cfg.model.theta);
    const std::size_t n = cfg.steps();
    const int order = cfg.solver.order;
    GeneratorSeries series;
    if (order == 0) {
        series.dt = cfg.grid.dt;
        series.n = n;
        series.order = 0;
        series.sys = sys;
        series.l0 = l0(sys);
    } else {
        const SpectralDensity sd = cfg.spectral_density();
        const BathTables tables =
            bath_tables(sd, cfg.grid.dt, n, required_frequencies(sys, order), cfg.solver.fft_n);
        series = generator_series(sys, tables.gamma, n, order);
    }

    SimulationResult out;
    const Mat2 rho0 = initial_state(sys.theta);
    out.trajectory = propagate(series, rho0, cfg.solver.stride);
    for (const auto& r : out.trajectory.states) {
        out.max_trace_error = std::max(out.max_trace_error, std::abs(r.trace() - 1.0));
        out.max_hermiticity_error = std::max(out.max_hermiticity_error, std::abs(r(0, 1) - std::conj(r(1, 0))));
    }
    if (cfg.solver.stride == 1 && n >= 16) {
        const double c2 = halve_step_check(series, rho0, 2);
        const double c4 = halve_step_check(series, rho0, 4);
        out.halving_ratio = c2 > 0.0 ? c4 / c2 : 0.0;
    }
    if (cfg.reference && !cfg.reference->path.empty()) {
        const ReferenceTrace ref = ingest_reference(cfg.reference->path);
        out.has_reference = true;
        out.avg_ref = time_avg_trace_distance(out.trajectory, ref.trajectory,
                                              std::min(out.trajectory.times.back(), ref.trajectory.times.back()));
    }
    out.trajectory.meta = {{"theta", sys.theta},
                           {"order", order},
                           {"temperature", cfg.bath.temperature},
                           {"source_label", "tcl" + std::to_string(order)}};
    return out;
}

SweepConfig sweep_config(const RunConfig& cfg) {
    if (!cfg.sweep) throw ConfigError("sweep: config has no [sweep] section");
    SweepConfig s;
    s.bath = cfg.spectral_density();
    s.thetas = cfg.sweep->theta_list;
    s.temperatures = cfg.sweep->temperature_list;
    s.dt = cfg.grid.dt;
    s.t_end = cfg.grid.t_end;
    s.t_star = cfg.sweep->t_star;
    s.fft_n = cfg.solver.fft_n;
    s.stride = cfg.solver.stride;
    if (cfg.reference) {
        s.reference_path = cfg.reference->path;
        s.reference_dir = cfg.reference->dir;
    }
    return s;
}

std::vector<OracleCell> oracle_validation(const RunConfig& cfg) {
    const auto& oc = cfg.oracle;
    const TimeGrid grid{cfg.grid.dt, std::size_t(std::llround(oc.t_max / cfg.grid.dt))};
    std::vector<OracleCell> cells;
    for (double T : oc.temperatures) {
        const DiscreteBathSpec spec = cfg.oracle_bath(T);
        for (double theta : oc.thetas) {
            OracleCell c;
            c.theta = theta;
            c.temperature = T;
            const SystemModel sys = SystemModel::from_theta(theta);
            const auto freqs = required_frequencies(sys, 4);

            const PerturbativeFit fit = fit_perturbative_orders(sys, spec, grid, oc.scales, oc.cubic_nuisance);
            for (double r : fit.residual) c.max_fit_residual = std::max(c.max_fit_residual, r);
            const BathTables tables = discrete_bath_functions(spec.modes, T, grid.dt, grid.n, freqs);
            const GeneratorSeries s2 = generator_series(sys, tables.gamma, grid.n, 2);
            c.l2_error = relative_error(fit.l2, s2.l2, grid.n, &c.l2_rel_t);
            double best = std::numeric_limits<double>::infinity();
            for (auto reading : {Tcl4Reading::derived, Tcl4Reading::unconjugated, Tcl4Reading::transposed}) {
                const Tcl4Integrals ints(tables.gamma, sys.energies, grid.n, reading);
                const GeneratorSeries s4 = generator_series(sys, tables.gamma, grid.n, 4, &ints);
                std::vector<double> per_t;
                const double e = relative_error(fit.l4, s4.l4, grid.n, &per_t);
                c.l4_error[reading] = e;
                if (e < best) {
                    best = e;
                    c.selected = reading;
                    c.l4_rel_t = per_t;
                }
            }
            for (std::size_t j = 0; j <= grid.n; ++j) c.times.push_back(grid.time(j));

            const Mat2 rho0 = initial_state(theta);
            for (double s : oc.exponent_scales) {
                const DiscreteBathSpec sp = spec.scaled(s);
                const Trajectory ex = exact_discrete_bath(sys, sp, rho0, grid);
                const BathTables tb = discrete_bath_functions(sp.modes, T, grid.dt, grid.n, freqs);
                const Tcl4Integrals ints(tb.gamma, sys.energies, grid.n, c.selected);
                const GeneratorSeries g2 = generator_series(sys, tb.gamma, grid.n, 2);
                const GeneratorSeries g4 = generator_series(sys, tb.gamma, grid.n, 4, &ints);
                const Trajectory t2 = propagate(g2, rho0), t4 = propagate(g4, rho0);
                double d2 = 0.0, d4 = 0.0;
                for (std::size_t j = 0; j <= grid.n; ++j) {
                    d2 = std::max(d2, trace_distance(ex.states[j], t2.states[j]));
                    d4 = std::max(d4, trace_distance(ex.states[j], t4.states[j]));
                }
                c.scales.push_back(s);
                c.deviation_tcl2.push_back(d2);
                c.deviation_tcl4.push_back(d4);
                if (s == 1.0) {
                    c.avg_exact_tcl2 = time_avg_trace_distance(ex, t2, oc.t_max);
                    c.avg_exact_tcl4 = time_avg_trace_distance(ex, t4, oc.t_max);
                    c.norm_ratio = norm_ratio(g4, grid.n);
                }
            }
            c.exponent_tcl2 = loglog_slope(c.scales, c.deviation_tcl2);
            c.exponent_tcl4 = loglog_slope(c.scales, c.deviation_tcl4);
            c.truncation_error = truncation_error(sys, spec, rho0, grid);
            cells.push_back(std::move(c));
        }
    }
    return cells;
}

BlochCheck bloch_checks(const RunConfig& cfg) {
    BlochCheck out;
    const SystemModel sys = SystemModel::from_theta(cfg.model.theta);
    const std::size_t n = cfg.steps();
    SpectralDensity sd = cfg.spectral_density();
    sd.modes.clear();   // the continuum part of the config, even next to oracle modes
    const BathTables tables = bath_tables(sd, cfg.grid.dt, n, required_frequencies(sys, 2), cfg.solver.fft_n);
    const StationaryGamma g = stationary_from(tables.gamma, sys.omega);
    const BlochGenerator B = bloch_redfield_bloch_basis(sys, g);
    out.params = B.params;
    out.first_row_max = B.matrix.row(0).cwiseAbs().maxCoeff();

    auto sorted_eigs = [](const Eigen::MatrixXcd& M) {
        const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M);
        std::vector<cplx> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
        std::sort(v.begin(), v.end(), [](cplx a, cplx b) {
            return std::abs(a.real() - b.real()) > 1e-9 ? a.real() < b.real() : a.imag() < b.imag();
        });
        return v;
    };
    const auto eb = sorted_eigs(B.matrix.cast<cplx>());
    const auto eh = sorted_eigs(B.hilbert_schmidt);
    for (std::size_t k = 0; k < eb.size(); ++k) out.eigenvalue_mismatch = std::max(out.eigenvalue_mismatch, std::abs(eb[k] - eh[k]));

    const Mat4 U = bloch_unitary();
    const Mat4 late = U.adjoint() * (l0(sys) + l2(sys, tables.gamma, n)) * U;
    out.l2_consistency = (late - B.matrix.cast<cplx>()).norm() / B.matrix.norm();

    const BlochGenerator B0 = bloch_redfield_bloch_basis(sys, StationaryGamma{0.0, 0.0, 0.0});
    const auto e0 = sorted_eigs(B0.matrix.cast<cplx>());
    const std::vector<cplx> expect{cplx(0, -sys.omega), cplx(0, 0), cplx(0, 0), cplx(0, sys.omega)};
    auto e0s = e0;
    std::sort(e0s.begin(), e0s.end(), [](cplx a, cplx b) { return a.imag() < b.imag(); });
    for (std::size_t k = 0; k < 4; ++k) out.zero_coupling_mismatch = std::max(out.zero_coupling_mismatch, std::abs(e0s[k] - expect[k]));

    // Overdamping flag against the discriminant sign on a grid of damping values
    const auto& p = B.params;
    for (int k = 0; k <= 400; ++k) {
        const double jsum = 0.01 * k;
        const double jp = 0.5 * jsum, jm = 0.5 * jsum;
        const double disc = overdamping_discriminant(jp, jm, p.S_plus, p.S_minus, sys.omega);
        if (std::abs(disc) < 1e-8) continue;
        const RelaxationEigen re = relaxation_eigenvalues(jp, jm, p.S_plus, p.S_minus, sys.omega);
        ++out.flag_samples;
        if (re.overdamped != (disc > 0.0)) ++out.flag_mismatches;
    }
    return out;
}

std::vector<BcfRow> bcf_convergence(const RunConfig& cfg) {
    const double dt = cfg.grid.dt;
    std::vector<BcfRow> rows;
    for (double T : cfg.bcf.temperatures) {
        SpectralDensity sd = cfg.spectral_density();
        sd.temperature = T;
        const BathCorrelationTable ref = bcf_fft(sd, std::size_t(std::llround(cfg.bcf.t_ref / dt)), dt);
        for (double tn : cfg.bcf.t_n) {
            const std::size_t N = std::size_t(std::llround(tn / dt));
            const BathCorrelationTable c = bcf_fft(sd, N, dt);
            const std::size_t last = std::min(N, std::size_t(std::llround(cfg.bcf.window / dt)));
            double worst = 0.0;
            for (std::size_t j = 0; j <= last; ++j) worst = std::max(worst, std::abs(c.values[j] - ref.values[j]));
            rows.push_back({T, tn, worst});
        }
    }
    return rows;
}

BenchReport bench_timings(const RunConfig& cfg) {
    BenchReport out;
    out.n = cfg.bench.n_list;
    const SystemModel sys = SystemModel::from_theta(cfg.model.theta);
    const std::size_t n_max = *std::max_element(out.n.begin(), out.n.end());
    const BathTables tables = bath_tables(cfg.spectral_density(), cfg.grid.dt, n_max,
                                          required_frequencies(sys, 4), cfg.solver.fft_n);
    // repeat each build until it has run for at least `floor` seconds
    auto timed = [&](std::size_t n, int order) {
        const double floor = 0.2;
        std::vector<double> samples;
        for (int r = 0; r < cfg.bench.repeats; ++r) {
            int calls = 0;
            const auto t0 = clock_type::now();
            do {
                const GeneratorSeries s = generator_series(sys, tables.gamma, n, order);
                ++calls;
            } while (seconds_since(t0) < floor);
            samples.push_back(seconds_since(t0) / calls);
        }
        return median(samples);
    };
    for (std::size_t n : out.n) {
        out.tcl2_seconds.push_back(timed(n, 2));
        out.tcl4_seconds.push_back(timed(n, 4));
    }
    const auto t0 = clock_type::now();
    const BathTables full = bath_tables(cfg.spectral_density(), cfg.grid.dt, n_max,
                                        required_frequencies(sys, 4), cfg.solver.fft_n);
    const GeneratorSeries s4 = generator_series(sys, full.gamma, n_max, 4);
    const Trajectory tr = propagate(s4, initial_state(sys.theta));
    out.full_run_seconds = seconds_since(t0);
    return out;
}

int run(std::string_view command, const RunConfig& cfg, std::ostream& log) {
    const auto t0 = clock_type::now();
    if (command == "simulate") {
        const SimulationResult r = simulate(cfg);
        const bool ok = r.max_trace_error <= 1e-10 && r.max_hermiticity_error <= 1e-10;
        nlohmann::json side = r.trajectory.meta;
        side["manifest"] = manifest(cfg, command);
        side["dt"] = r.trajectory.dt;
        side["steps"] = r.trajectory.size();
        side["first_positivity_violation"] = violation_json(r.trajectory.first_violation);
        side["max_trace_error"] = r.max_trace_error;
        side["max_hermiticity_error"] = r.max_hermiticity_error;
        if (r.halving_ratio > 0.0) side["rk4_halving_ratio"] = r.halving_ratio;
        if (r.has_reference) side["time_avg_distance_to_reference"] = r.avg_ref;
        if (wants_csv(cfg)) {
            auto os = open_csv(out_path(cfg, "trajectory.csv"));
            write_trajectory_csv(os, r.trajectory);
        }
        write_json(out_path(cfg, "trajectory.json"), side);
        log << "simulate: " << r.trajectory.size() << " steps, trace error " << r.max_trace_error
            << ", hermiticity error " << r.max_hermiticity_error << ", " << seconds_since(t0) << " s\n";
        return ok ? 0 : 1;
    }

    if (command == "sweep") {
        const BenchmarkResult res = sweep(sweep_config(cfg));
        const bool complete = std::all_of(res.cells.begin(), res.cells.end(), [](const CellMetrics& c) { return c.ok; });
        nlohmann::json j = res.to_json();
        j["manifest"] = manifest(cfg, command, complete);
        if (wants_csv(cfg)) {
            auto os = open_csv(out_path(cfg, "sweep.csv"));
            res.write_csv(os);
        }
        write_json(out_path(cfg, "sweep.json"), j);
        std::size_t failed = 0;
        for (const auto& c : res.cells)
            if (!c.ok) {
                ++failed;
                log << "sweep: cell theta=" << c.theta << " T=" << c.temperature << " failed: " << c.error << '\n';
            }
        log << "sweep: " << res.cells.size() << " cells, " << failed << " failed, " << seconds_since(t0) << " s\n";
        return complete ? 0 : 1;
    }

    if (command == "oracle") {
        const auto cells = oracle_validation(cfg);
        bool ok = true;
        nlohmann::json jc = nlohmann::json::array();
        for (const auto& c : cells) {
            nlohmann::json readings = nlohmann::json::object();
            for (const auto& [r, e] : c.l4_error) readings[to_string(r)] = e;
            const bool cell_ok = c.l2_error <= cfg.oracle.l2_tolerance &&
                                 c.l4_error.at(c.selected) <= cfg.oracle.l4_tolerance &&
                                 std::abs(c.exponent_tcl2 - 2.0) <= 0.5 && std::abs(c.exponent_tcl4 - 3.0) <= 0.5;
            ok = ok && cell_ok;
            jc.push_back({{"theta", c.theta},
                          {"T", c.temperature},
                          {"ok", cell_ok},
                          {"l2_relative_error", c.l2_error},
                          {"l4_relative_error_by_reading", readings},
                          {"selected_reading", to_string(c.selected)},
                          {"max_fit_residual", c.max_fit_residual},
                          {"t", c.times},
                          {"l2_relative_error_t", c.l2_rel_t},
                          {"l4_relative_error_t", c.l4_rel_t},
                          {"coupling_scales", c.scales},
                          {"max_distance_exact_tcl2", c.deviation_tcl2},
                          {"max_distance_exact_tcl4", c.deviation_tcl4},
                          {"exponent_tcl2", c.exponent_tcl2},
                          {"exponent_tcl4", c.exponent_tcl4},
                          {"time_avg_exact_tcl2", c.avg_exact_tcl2},
                          {"time_avg_exact_tcl4", c.avg_exact_tcl4},
                          {"norm_ratio", c.norm_ratio},
                          {"truncation_error", c.truncation_error}});
            log << "oracle: theta=" << c.theta << " T=" << c.temperature << " l2 " << c.l2_error << " l4 "
                << c.l4_error.at(c.selected) << " (" << to_string(c.selected) << ") exponents "
                << c.exponent_tcl2 << ", " << c.exponent_tcl4 << '\n';
        }
        nlohmann::json report = {{"cells", jc}};
        if (cfg.bath.cutoff) {
            const BlochCheck b = bloch_checks(cfg);
            const bool bloch_ok = b.first_row_max <= 1e-14 && b.eigenvalue_mismatch <= 1e-10 &&
                                  b.zero_coupling_mismatch <= 1e-12 && b.flag_mismatches == 0;
            ok = ok && bloch_ok;
            report["eigenvalue_checks"] = {{"ok", bloch_ok},
                                           {"first_row_max", b.first_row_max},
                                           {"eigenvalue_mismatch", b.eigenvalue_mismatch},
                                           {"l2_consistency", b.l2_consistency},
                                           {"zero_coupling_mismatch", b.zero_coupling_mismatch},
                                           {"flag_samples", b.flag_samples},
                                           {"flag_mismatches", b.flag_mismatches},
                                           {"J_plus", b.params.J_plus},
                                           {"J_minus", b.params.J_minus},
                                           {"S_plus", b.params.S_plus},
                                           {"S_minus", b.params.S_minus}};
        }
        report["ok"] = ok;
        report["manifest"] = manifest(cfg, command);
        write_json(out_path(cfg, "oracle.json"), report);
        log << "oracle: " << (ok ? "all checks passed" : "some checks failed") << ", " << seconds_since(t0) << " s\n";
        return ok ? 0 : 1;
    }

    if (command == "bcf-check") {
        const auto rows = bcf_convergence(cfg);
        bool ok = true;
        nlohmann::json jr = nlohmann::json::array();
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (k > 0 && rows[k].temperature == rows[k - 1].temperature && !(rows[k].max_abs_diff < rows[k - 1].max_abs_diff))
                ok = false;
            jr.push_back({{"T", rows[k].temperature}, {"t_N", rows[k].t_n}, {"max_abs_diff", rows[k].max_abs_diff}});
        }
        if (wants_csv(cfg)) {
            auto os = open_csv(out_path(cfg, "bcf_convergence.csv"));
            os << "T,t_N,max_abs_diff\n";
            for (const auto& r : rows) os << r.temperature << ',' << r.t_n << ',' << r.max_abs_diff << '\n';
        }
        write_json(out_path(cfg, "bcf_convergence.json"),
                   {{"rows", jr}, {"t_ref", cfg.bcf.t_ref}, {"window", cfg.bcf.window}, {"dt", cfg.grid.dt},
                    {"monotone", ok}, {"manifest", manifest(cfg, command)}});
        log << "bcf-check: " << rows.size() << " rows, " << (ok ? "monotone" : "not monotone") << ", "
            << seconds_since(t0) << " s\n";
        return ok ? 0 : 1;
    }

    if (command == "bench") {
        const BenchReport b = bench_timings(cfg);
        bool ok = true;
        nlohmann::json ratios = nlohmann::json::array();
        for (std::size_t k = 1; k < b.n.size(); ++k) {
            const double f = double(b.n[k]) / double(b.n[k - 1]);
            const double r2 = b.tcl2_seconds[k] / b.tcl2_seconds[k - 1];
            const double r4 = b.tcl4_seconds[k] / b.tcl4_seconds[k - 1];
            // O(n) for TCL2, O(n²) for TCL4, each within 30 %
            const bool good = std::abs(r2 / f - 1.0) <= 0.3 && std::abs(r4 / (f * f) - 1.0) <= 0.3;
            ok = ok && good;
            ratios.push_back({{"from", b.n[k - 1]}, {"to", b.n[k]}, {"tcl2_ratio", r2}, {"tcl4_ratio", r4},
                              {"expected_tcl2", f}, {"expected_tcl4", f * f}, {"ok", good}});
        }
        write_json(out_path(cfg, "bench.json"), {{"n", b.n},
                                                 {"tcl2_seconds", b.tcl2_seconds},
                                                 {"tcl4_seconds", b.tcl4_seconds},
                                                 {"ratios", ratios},
                                                 {"full_run_seconds", b.full_run_seconds},
                                                 {"workers", worker_count()},
                                                 {"ok", ok},
                                                 {"manifest", manifest(cfg, command)}});
        log << "bench: full TCL4 run " << b.full_run_seconds << " s, scaling " << (ok ? "ok" : "off") << '\n';
        return ok ? 0 : 1;
    }

    throw std::invalid_argument("unknown command '" + std::string(command) +
                                "' (expected simulate, sweep, oracle, bcf-check or bench)");
}

} // namespace tcl4
