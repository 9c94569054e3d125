// bath.hpp: Spectral densities, bath correlation functions and timed spectral densities

#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace tcl4 {

using cplx = std::complex<double>;

enum class Cutoff { drude, exponential };

const char* to_string(Cutoff c) noexcept;
Cutoff cutoff_from_string(std::string_view s);

struct BathMode {
    double omega{1.0};
    double g{0.0};   // form factor; the mode contributes π g² δ(ω − omega) to J
};

// Ohmic spectral density J(ω) = 2π λ² ω f(ω), or a set of discrete lines.
// Units: Ω = ħ = k_B = 1.
struct SpectralDensity {
    double coupling{1.0};        // λ²
    Cutoff cutoff{Cutoff::drude};
    double omega_c{10.0};
    double temperature{1.0};
    std::vector<BathMode> modes; // when non-empty, replaces the continuum form

    bool is_discrete() const noexcept { return !modes.empty(); }
    double cutoff_function(double w) const noexcept;
    // throws std::invalid_argument on violated invariants
    void validate() const;
    SpectralDensity scaled(double s) const;
};

// J(ω) on the real line. For ω < 0 returns e^{βω} J(−ω) (zero at T = 0).
double spectral_density(const SpectralDensity& sd, double w);

// Full-line thermal spectrum S(ω) = ∫ C(t) e^{iωt} dt = 2 J(ω) / (1 − e^{−βω})
// with J odd-extended. Positive frequencies are emission, so
// S(−ω) = e^{−βω} S(ω). S(0) = 4π λ² T f(0).
double thermal_noise_weight(const SpectralDensity& sd, double w);

// J(ω) coth(ω/2T) for ω ≥ 0, with the finite ω → 0 limit.
double noise_integrand(const SpectralDensity& sd, double w);

enum class BcfProvenance { fft, quadrature, closed_form_discrete };

struct FftParams {
    std::size_t N{0};
    double omega_max{0.0};   // π / dt
    double domega{0.0};      // π / (N dt)
};

// C(t_j), t_j = j·dt, j = 0..size-1.
struct BathCorrelationTable {
    double dt{0.01};
    std::vector<cplx> values;
    FftParams fft;
    BcfProvenance provenance{BcfProvenance::fft};

    std::size_t size() const noexcept { return values.size(); }
    double horizon() const noexcept { return values.empty() ? 0.0 : dt * double(values.size() - 1); }
    double time(std::size_t j) const noexcept { return dt * double(j); }
};

// Smallest power of two N with N·dt ≥ min_span.
std::size_t default_fft_size(double dt, double min_span = 5000.0);

// C(t) on the grid t_j = j·dt, j = 0..N, via a 2N-point FFT of the thermal
// spectrum sampled at ω_k = kπ/(N dt), k = −N..N (trapezoid weights at ±ω_M).
// `horizon` is the simulation span that must be covered by N·dt.
BathCorrelationTable bcf_fft(const SpectralDensity& sd, std::size_t N, double dt,
                             double horizon = 0.0);

// Direct adaptive quadrature of C(t); throws std::runtime_error if the
// absolute tolerance 1e-10 cannot be met.
cplx bcf_quadrature(const SpectralDensity& sd, double t);

// Γ_ω(t_j) = ∫_0^{t_j} C(s) e^{iωs} ds and ∂Γ_ω/∂ω for every ω in `freqs`.
class GammaTable {
public:
    GammaTable() = default;
    GammaTable(std::vector<double> freqs, double dt, std::size_t n);

    const std::vector<double>& freqs() const noexcept { return freqs_; }
    double dt() const noexcept { return dt_; }
    std::size_t n() const noexcept { return n_; }

    // index of ω in the table; throws std::out_of_range if absent
    std::size_t index_of(double w) const;
    bool contains(double w) const noexcept;

    const std::vector<cplx>& gamma(std::size_t f) const { return gamma_[f]; }
    const std::vector<cplx>& dgamma(std::size_t f) const { return dgamma_[f]; }
    std::vector<cplx>& gamma(std::size_t f) { return gamma_[f]; }
    std::vector<cplx>& dgamma(std::size_t f) { return dgamma_[f]; }

    cplx value(double w, std::size_t j) const { return gamma_[index_of(w)][j]; }
    cplx derivative(double w, std::size_t j) const { return dgamma_[index_of(w)][j]; }
    // Γ_ω(t_n), used as the stationary approximation
    cplx asymptotic(double w) const { return gamma_[index_of(w)][n_]; }

    static constexpr double freq_tol = 1e-9;

private:
    std::vector<double> freqs_;
    double dt_{0.0};
    std::size_t n_{0};
    std::vector<std::vector<cplx>> gamma_;
    std::vector<std::vector<cplx>> dgamma_;
};

// Cumulative trapezoid on the BCF grid; covers t_0..t_n.
GammaTable gamma_table(const BathCorrelationTable& bcf, std::span<const double> freqs,
                       std::size_t n);

struct BathTables {
    BathCorrelationTable bcf;
    GammaTable gamma;
};
using DiscreteBathTables = BathTables;

// Closed-form C(t) and Γ_ω(t) for a set of discrete modes.
DiscreteBathTables discrete_bath_functions(std::span<const BathMode> modes, double temperature,
                                           double dt, std::size_t n,
                                           std::span<const double> freqs);

// C(t) and Γ tables on t_0..t_n: FFT for a continuum (fft_n = 0 picks
// default_fft_size), closed form for discrete modes.
BathTables bath_tables(const SpectralDensity& sd, double dt, std::size_t n,
                       std::span<const double> freqs, std::size_t fft_n = 0);

// Bose occupation 1/(e^{ω/T} − 1); zero at T = 0.
double bose(double w, double temperature) noexcept;

void write_bcf_csv(std::ostream& os, const BathCorrelationTable& bcf, std::size_t n);
void write_gamma_csv(std::ostream& os, const GammaTable& gt);

} // namespace tcl4
