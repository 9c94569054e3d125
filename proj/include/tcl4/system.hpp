// system.hpp: Two-level system model and vectorization helpers

#pragma once

#include <Eigen/Dense>

#include <complex>

namespace tcl4 {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;

struct Eigenbasis {
    Eigen::Matrix2d V;   // columns are eigenvectors, V(1,1) > 0
    Eigen::Vector2d E;   // (Ω/2, −Ω/2)
};

// Eigenvectors of H_S = −(ε/2)σ_z + (Δ/2)σ_x, ordered by descending energy.
Eigenbasis eigenbasis(double epsilon, double delta);

// Spin-boson system in the H_S eigenbasis. Everything downstream works in
// this basis: E = (Ω/2, −Ω/2), A′ = ½(sinθ σ_z + cosθ σ_x).
struct SystemModel {
    double omega{1.0};
    double theta{0.0};
    Eigen::Vector2d energies;
    Eigen::Matrix2d coupling;

    static SystemModel from_theta(double theta, double omega = 1.0);

    double epsilon() const noexcept;
    double delta() const noexcept;
    double bohr(int a, int b) const noexcept { return energies(a) - energies(b); }
};

// Row-major vectorization: v[2n + m] = ρ(n, m).
Vec4 vec(const Mat2& rho);
Mat2 unvec(const Vec4& v);

// Superoperators of ρ ↦ Xρ and ρ ↦ ρX in the row-major convention.
Mat4 left_mult(const Mat2& X);
Mat4 right_mult(const Mat2& X);

} // namespace tcl4
