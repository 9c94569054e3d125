// propagation.hpp: RK4 propagation of ρ under a tabulated generator

#pragma once

#include "tcl4/generators.hpp"
#include "tcl4/system.hpp"

#include <json.hpp>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tcl4 {

struct PositivityViolation {
    std::size_t step{0};
    double time{0.0};
    double min_eigenvalue{0.0};
};

// States are 2×2 density matrices in the H_S eigenbasis, Schrödinger picture.
struct Trajectory {
    double dt{0.01};
    std::vector<double> times;
    std::vector<Mat2> states;
    std::vector<double> min_eig;
    std::optional<PositivityViolation> first_violation;
    nlohmann::json meta = nlohmann::json::object();

    std::size_t size() const noexcept { return states.size(); }
};

inline constexpr double positivity_tol = 1e-10;

// ½[[1 + sinθ, −cosθ], [−cosθ, 1 − sinθ]]
Mat2 initial_state(double theta);

// Smallest eigenvalue of the Hermitian part of ρ.
double min_eigenvalue(const Mat2& rho);

// Classical RK4 on dρ/dt = L(t)ρ with step stride·dt. For stride 1 the
// midpoint generator is the linear interpolation of neighbouring grid values;
// for even strides it is the grid value itself. An order-0 series with a
// diagonal L0 is stepped with its exact exponential. Throws on NaN/Inf with
// the step index.
Trajectory propagate(const GeneratorSeries& series, const Mat2& rho0, std::size_t stride = 1);

// Max trace distance between the stride-2s and stride-s trajectories at their
// shared times; s must be even so both use exact midpoints.
double halve_step_check(const GeneratorSeries& series, const Mat2& rho0, std::size_t stride = 2);

// Trajectory CSV: t,rho11_re,rho22_re,rho12_re,rho12_im,min_eig
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
// Writes <stem>.csv and the <stem>.json sidecar.
void write_trajectory_files(const std::string& stem, const Trajectory& traj,
                            const nlohmann::json& extra = nlohmann::json::object());

} // namespace tcl4
