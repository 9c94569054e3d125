// oracle.hpp: exact discrete-bath dynamics and reference analytics

#pragma once

#include "tcl4/bath.hpp"
#include "tcl4/propagation.hpp"
#include "tcl4/system.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <vector>

namespace tcl4 {

struct DiscreteBathSpec {
    std::vector<BathMode> modes;
    int fock_cut{4};               // levels per mode (0 .. fock_cut−1 bosons)
    double temperature{0.0};
    std::size_t dim_cap{16384};

    void validate() const;
    std::size_t dimension() const;
    DiscreteBathSpec scaled(double s) const;   // g → √s g
};

struct TimeGrid {
    double dt{0.01};
    std::size_t n{1000};
    double time(std::size_t j) const noexcept { return dt * double(j); }
};

// Reduced propagator P(t) (4×4, row-major vectorization) and its exact time
// derivative, from the full H = H_S + H_B + A′ ⊗ Σ g_i (b_i + b_i†).
struct ExactPropagator {
    TimeGrid grid;
    std::vector<Mat4> P;
    std::vector<Mat4> Pdot;
};

ExactPropagator exact_reduced_propagator(const SystemModel& sys, const DiscreteBathSpec& spec,
                                         const TimeGrid& grid);

Trajectory exact_discrete_bath(const SystemModel& sys, const DiscreteBathSpec& spec,
                               const Mat2& rho0, const TimeGrid& grid);

// Max trace distance between runs at fock_cut and fock_cut + 1.
double truncation_error(const SystemModel& sys, const DiscreteBathSpec& spec, const Mat2& rho0,
                        const TimeGrid& grid);

// L(t) = Ṗ(t) P(t)^{-1}; throws "TCL generator singular" when cond P > 1e8.
// At t = 0 the value is Ṗ(0) = L0.
std::vector<Mat4> extract_exact_tcl_generator(const SystemModel& sys, const DiscreteBathSpec& spec,
                                              const TimeGrid& grid);

struct PerturbativeFit {
    std::vector<Mat4> l2;       // coefficient of s
    std::vector<Mat4> l4;       // coefficient of s²
    std::vector<double> residual;   // per t, max fit residual relative to the largest entry
    std::vector<bool> flagged;
    double residual_threshold{1e-6};
};

// Least-squares fit of L_exact(t; s) − L0 = a s + b s² (+ c s³ when
// `cubic_nuisance`) per entry, with g → √s g.
PerturbativeFit fit_perturbative_orders(const SystemModel& sys, const DiscreteBathSpec& spec,
                                        const TimeGrid& grid, const std::vector<double>& scales,
                                        bool cubic_nuisance = false);

// Same fit on precomputed samples: samples[k][j] belongs to scales[k].
PerturbativeFit fit_orders(const std::vector<std::vector<Mat4>>& samples,
                           const std::vector<double>& scales, bool cubic_nuisance = false);

// Decoherence exponent γ(t) for coupling ½σ_z:
// γ = (1/π) ∫ J(ω) coth(ω/2T) (1 − cos ωt)/ω² dω.
double dephasing_exponent(const SpectralDensity& sd, double t);

// ρ12(t)/ρ12(0) = e^{−iΩt} e^{−γ(t)} at Ω = 1.
cplx pure_dephasing_coherence(const SpectralDensity& sd, double t, double omega = 1.0);

// Stationary Γ_ω(∞) for ω ∈ {−Ω, 0, +Ω}.
struct StationaryGamma {
    cplx minus, zero, plus;
    cplx at(double w, double omega) const;
};

// J_ω = ½ Re Γ_{−ω}(∞), S_ω = −½ Im Γ_{−ω}(∞)
struct RelaxationParams {
    double J_plus, J_minus, J_zero;
    double S_plus, S_minus, S_zero;
};
RelaxationParams relaxation_params(const StationaryGamma& g);
StationaryGamma stationary_gamma(const RelaxationParams& p);

struct BlochGenerator {
    Eigen::Matrix4d matrix;   // basis (I, σx, −σy, σz)/√2
    Mat4 hilbert_schmidt;     // L0 + D_BR in the row-major vectorization
    RelaxationParams params;
};

// Unitary from the row-major vectorization to the Bloch basis.
Mat4 bloch_unitary();

BlochGenerator bloch_redfield_bloch_basis(const SystemModel& sys, const StationaryGamma& g);

struct RelaxationEigen {
    std::array<cplx, 3> roots;
    bool overdamped;   // all three roots real
};

RelaxationEigen relaxation_eigenvalues(double J_plus, double J_minus, double S_plus, double S_minus,
                                       double splitting);

// (J₋ + J₊)² − 4(Δ² − ΔS₋ + ΔS₊)
double overdamping_discriminant(double J_plus, double J_minus, double S_plus, double S_minus,
                                double splitting);

} // namespace tcl4
