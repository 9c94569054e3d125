// commands.hpp: the simulate / sweep / oracle / bcf-check / bench workflows
//
// Each workflow is available as a function returning its data and through
// run(), which writes files into cfg.output.dir. Every CSV is accompanied by
// a JSON file with the same stem holding the data summary and the manifest
// (config hash, code version, completeness).

#pragma once

#include "tcl4/benchmark.hpp"
#include "tcl4/config.hpp"
#include "tcl4/generators.hpp"
#include "tcl4/oracle.hpp"
#include "tcl4/propagation.hpp"

#include <json.hpp>

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tcl4 {

struct SimulationResult {
    Trajectory trajectory;
    double max_trace_error{0.0};        // max |tr ρ − 1|
    double max_hermiticity_error{0.0};  // max |ρ12 − ρ21*|
    double halving_ratio{0.0};          // check(stride 4) / check(stride 2); 0 if not computed
    bool has_reference{false};
    double avg_ref{0.0};
};

SimulationResult simulate(const RunConfig& cfg);

SweepConfig sweep_config(const RunConfig& cfg);

struct OracleCell {
    double theta{0.0}, temperature{0.0};
    double l2_error{0.0};                                 // max_t ‖Δ‖_F / max_t ‖ref‖_F
    std::map<Tcl4Reading, double> l4_error;               // per candidate reading
    Tcl4Reading selected{Tcl4Reading::derived};
    std::vector<double> times, l2_rel_t, l4_rel_t;        // per-t ‖Δ(t)‖_F / max_t ‖ref‖_F
    double max_fit_residual{0.0};
    std::vector<double> scales, deviation_tcl2, deviation_tcl4;
    double exponent_tcl2{0.0}, exponent_tcl4{0.0};
    double avg_exact_tcl2{0.0}, avg_exact_tcl4{0.0};      // at scale 1 over [0, t_max]
    double norm_ratio{0.0};                               // at t_max, scale 1
    double truncation_error{0.0};
};

std::vector<OracleCell> oracle_validation(const RunConfig& cfg);

struct BlochCheck {
    double first_row_max{0.0};
    double eigenvalue_mismatch{0.0};       // Bloch basis vs Hilbert–Schmidt basis
    double l2_consistency{0.0};            // ‖U†(L0 + L2(t_end))U − Bloch‖ relative
    double zero_coupling_mismatch{0.0};    // eigenvalues vs {0, 0, ±iΩ}
    std::size_t flag_samples{0}, flag_mismatches{0};
    RelaxationParams params{};
};

// Bloch-basis checks on the continuum bath of cfg (cutoff, omega_c, coupling,
// temperature; discrete modes are ignored).
BlochCheck bloch_checks(const RunConfig& cfg);

struct BcfRow {
    double temperature{0.0}, t_n{0.0}, max_abs_diff{0.0};
};

std::vector<BcfRow> bcf_convergence(const RunConfig& cfg);

struct BenchReport {
    std::vector<std::size_t> n;
    std::vector<double> tcl2_seconds, tcl4_seconds;   // median over repeats
    double full_run_seconds{0.0};                     // tables + TCL4 series + propagation at max n
};

BenchReport bench_timings(const RunConfig& cfg);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Runs one command and writes its files. Returns 0 when every validation of
// the command passes, 1 otherwise. Errors propagate as exceptions.
int run(std::string_view command, const RunConfig& cfg, std::ostream& log);

} // namespace tcl4
