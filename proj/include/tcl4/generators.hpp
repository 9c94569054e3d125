// generators.hpp: TCL0/TCL2/TCL4 generators on the vectorized 2×2 density matrix
//
// Conventions: row-major vectorization (index 2n + m), Bohr frequencies
// ω_ab = E_a − E_b, and the coupling strength lives entirely inside Γ (the
// bookkeeping λ of the expansion is 1).
//
// The fourth-order generator is the time-ordered partial cumulant of four
// interaction Liouvillians. With the Gaussian bath it reduces to two crossing
// pairings, (0,2)(1,3) and (0,3)(1,2), each a triple integral of two BCF
// factors. Those integrals are expressed through the F, C, R bath operators
// with plain Γ_ω(t) factors, plus the conjugated-second-kernel variant R̃:
//
//   F(ω1,ω2,ω3) = −∫ΔΓ_ω1(t,τ) ΔΓ_ω2(t,t−τ) e^{−iΣτ} dτ + iΓ_ω2 (Γ_{−ω2−ω3} − Γ_ω1)/Σ
//   C(ω1,ω2,ω3) = −∫ΔΓ_ω1(t,τ) ΔΓ*_ω2(t,t−τ) e^{−iΣτ} dτ + iΓ*_ω2 (Γ_{−ω2−ω3} − Γ_ω1)/Σ
//   R(ω1,ω2,ω3) = −∫ΔΓ_ω1(t,τ) ΔΓ_ω2(t,τ) e^{−iΣτ} dτ + iΓ_ω2 (Γ_{−ω2−ω3} − Γ_ω1)/Σ
//   R̃(ω1,ω2,ω3) = −∫ΔΓ_ω1(t,τ) ΔΓ*_ω2(t,τ) e^{−iΣτ} dτ + iΓ*_ω2 (Γ_{−ω2−ω3} − Γ_ω1)/Σ
//
// with Σ = ω1 + ω2 + ω3 and ΔΓ_ω(t,s) = Γ_ω(t) − Γ_ω(s). For |Σ| below the
// resonance threshold the quotient becomes −∂Γ_ω1/∂ω.

#pragma once

#include "tcl4/bath.hpp"
#include "tcl4/system.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace tcl4 {

enum class Order { l0, l2, l4, total };

struct Superoperator {
    Mat4 matrix{Mat4::Zero()};
    double time{0.0};
    Order order{Order::total};
};

inline constexpr double resonance_threshold = 1e-8;

// Grid index of t on a dt grid of n+1 points; throws if t is off-grid.
std::size_t grid_index(double t, double dt, std::size_t n);

Mat4 l0(const SystemModel& sys);

// Redfield generator at grid point j.
Mat4 l2(const SystemModel& sys, const GammaTable& gt, std::size_t j);
Superoperator l2(const SystemModel& sys, const GammaTable& gt, double t);

struct BathFCR {
    cplx F, C, R, R_conj;
};

BathFCR bath_FCR(const GammaTable& gt, double w1, double w2, double w3, std::size_t j);

// Frequencies the Γ table must contain for the given order (2 or 4).
std::vector<double> required_frequencies(const SystemModel& sys, int order);

enum class Pairing { crossed_02_13, crossed_03_12 };
enum class Kernel { c, c_conj };

// Integral over 0 < τ1 < τ2 < τ3 < t of two BCF factors with phase
// e^{−i(ν1τ1 + ν2τ2 + ν3τ3)}:
//   crossed_02_13: K_x(τ2) K_y(τ3 − τ1)
//   crossed_03_12: K_x(τ3) K_y(τ2 − τ1)
struct Tcl4Term {
    Pairing pairing;
    Kernel x, y;
    std::array<double, 3> nu;
    Mat4 coeff;
};

// Time-independent system-side structure of L4: the half with the latest
// Liouvillian acting from the left. The other half is its Hermitian mirror.
std::vector<Tcl4Term> l4_structure(const SystemModel& sys);

// Readings of the decorated kernels in the C and R̃ operators. `derived` is the
// contour result above and the default; the others drop the conjugation
// (unconjugated) or replace it by swapping ω1 and ω2 (transposed). They exist
// so the oracle can rank readings against the exact λ²-series.
enum class Tcl4Reading { derived, unconjugated, transposed };
std::string to_string(Tcl4Reading r);

// Every pairing integral on the grid t_0..t_n. Depends on the bath and the
// system energies only, so one instance serves all bias angles.
class Tcl4Integrals {
public:
    Tcl4Integrals() = default;
    Tcl4Integrals(const GammaTable& gt, const Eigen::Vector2d& energies, std::size_t n,
                  Tcl4Reading reading = Tcl4Reading::derived);

    std::size_t n() const noexcept { return n_; }
    Tcl4Reading reading() const noexcept { return reading_; }
    cplx value(Pairing p, Kernel x, Kernel y, const std::array<double, 3>& nu,
               std::size_t j) const;

private:
    std::size_t slot(Pairing p, Kernel y, const std::array<double, 3>& nu) const;

    std::vector<double> bohr_;
    std::size_t n_{0};
    Tcl4Reading reading_{Tcl4Reading::derived};
    std::vector<std::vector<cplx>> base_;   // x = c only
};

Mat4 l4(const std::vector<Tcl4Term>& structure, const Tcl4Integrals& integrals, std::size_t j);
Mat4 l4(const SystemModel& sys, const GammaTable& gt, std::size_t j);
Superoperator l4(const SystemModel& sys, const GammaTable& gt, double t);

struct GeneratorSeries {
    double dt{0.01};
    std::size_t n{0};
    int order{2};
    SystemModel sys;
    std::string bath_provenance;
    Mat4 l0{Mat4::Zero()};
    std::vector<Mat4> l2;   // empty for order 0
    std::vector<Mat4> l4;   // empty below order 4

    std::size_t size() const noexcept { return n + 1; }
    double time(std::size_t j) const noexcept { return dt * double(j); }
    Mat4 total(std::size_t j) const;
    Mat4 component(Order o, std::size_t j) const;
};

// L(t_j) for j = 0..n. `integrals` may be shared across bias angles.
GeneratorSeries generator_series(const SystemModel& sys, const GammaTable& gt, std::size_t n,
                                 int order, const Tcl4Integrals* integrals = nullptr);

// ‖L4(t_j)‖_F / ‖L2(t_j)‖_F
double norm_ratio(const GeneratorSeries& series, std::size_t j);

void write_generator_csv(std::ostream& os, const GeneratorSeries& series, Order o);

} // namespace tcl4
