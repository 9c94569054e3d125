// benchmark.hpp: distances, relaxation fits, reference ingestion, sweeps

#pragma once

#include "tcl4/bath.hpp"
#include "tcl4/propagation.hpp"
#include "tcl4/system.hpp"

#include <json.hpp>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tcl4 {

// ½‖ρ1 − ρ2‖₁ from the singular values of the difference.
double trace_distance(const Mat2& a, const Mat2& b);

struct SplitDistance {
    double pop;   // ½ Σ_i |Δρ_ii|
    double coh;   // ½ Σ_{i≠j} |Δρ_ij|
};
SplitDistance split_trace_distance(const Mat2& a, const Mat2& b);

// Trajectory state at time t by linear interpolation; throws past the end.
Mat2 state_at(const Trajectory& traj, double t);

// (1/t_end) ∫_0^{t_end} d(t) dt, trapezoid on the first trajectory's grid.
double time_avg_trace_distance(const Trajectory& a, const Trajectory& b, double t_end);

struct RelaxationFit {
    double a{0.0}, rate{0.0}, b{0.0};
    double residual{0.0};     // ‖model − data‖ / ‖data‖
    int iterations{0};
    bool converged{false};
};

// Fit ρ_ii(t) ≈ a e^{−rate t} + b.
RelaxationFit fit_relaxation(const std::vector<double>& t, const std::vector<double>& y);
RelaxationFit fit_relaxation(const Trajectory& traj, int population_index);

struct ReferenceTrace {
    Trajectory trajectory;
    std::string source_label;
    std::string format_version;
    nlohmann::json solver_params;
};

// Parses a trajectory CSV (and <stem>.json sidecar when present).
ReferenceTrace ingest_reference(const std::string& path);
ReferenceTrace parse_reference_csv(std::istream& is, const std::string& origin = "<stream>");

struct CellMetrics {
    double theta{0.0}, temperature{0.0};
    bool ok{true};
    std::string error;
    // TCL4 versus TCL2
    std::vector<double> t_star;
    std::vector<SplitDistance> split_24;     // at each t*
    std::vector<double> d_24;
    double avg_24{0.0};
    double max_24{0.0};
    double norm_ratio{0.0};
    double relaxation_rate_tcl2{0.0}, relaxation_rate_tcl4{0.0};
    std::optional<PositivityViolation> violation_tcl2, violation_tcl4;
    double max_trace_error{0.0};         // max |tr ρ − 1| over both trajectories
    double max_hermiticity_error{0.0};   // max |ρ12 − ρ21*| over both trajectories
    // against the reference, when supplied
    bool has_reference{false};
    double avg_ref_2{0.0}, avg_ref_4{0.0};
    std::vector<SplitDistance> split_ref_2, split_ref_4;
};

struct SweepConfig {
    SpectralDensity bath;               // temperature is overridden per row
    std::vector<double> thetas, temperatures;
    double dt{0.01};
    double t_end{15.0};
    std::vector<double> t_star{10.0, 15.0};
    double norm_ratio_time{15.0};       // clamped to t_end
    std::size_t fft_n{0};
    std::size_t stride{1};
    std::string reference_path;         // used for a 1×1 grid
    std::string reference_dir;          // <dir>/cell_<i>_<j>.csv, i over θ, j over T
};

struct BenchmarkResult {
    std::vector<double> thetas, temperatures;
    std::vector<double> t_star;
    double t_end{15.0};
    std::vector<CellMetrics> cells;   // cells[i * temperatures.size() + j] is (θ_i, T_j)

    nlohmann::json to_json() const;
    void write_csv(std::ostream& os) const;
};

// Every (θ, T) cell: TCL2 and TCL4 trajectories from ρ0(θ), their distances,
// norm ratio, relaxation fits, positivity logs, and distances to a reference
// trace when one is found. Bath tables are built once per T; a failing cell
// is recorded and the sweep continues.
BenchmarkResult sweep(const SweepConfig& cfg);

} // namespace tcl4
