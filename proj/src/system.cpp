#include "tcl4/system.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tcl4 {

Eigenbasis eigenbasis(double epsilon, double delta) {
    const double omega = std::hypot(epsilon, delta);
    if (!(omega > 0.0)) throw std::invalid_argument("eigenbasis: (epsilon, delta) must not both vanish");
    const double s = epsilon / omega;
    const double c = delta / omega;

    // upper eigenvector ∝ (Δ, Ω + ε); use (Ω − ε, Δ) when ε < 0 to avoid cancellation
    Eigen::Vector2d up;
    if (s >= 0.0)
        up << c, 1.0 + s;
    else
        up << 1.0 - s, c;
    up.normalize();
    if (up(0) < 0.0 || (up(0) == 0.0 && up(1) < 0.0)) up = -up;

    Eigenbasis out;
    out.V.col(0) = up;
    out.V.col(1) << -up(1), up(0);
    if (out.V(1, 1) < 0.0) out.V.col(1) = -out.V.col(1);
    out.E << omega / 2.0, -omega / 2.0;
    return out;
}

SystemModel SystemModel::from_theta(double theta, double omega) {
    if (!std::isfinite(theta) || theta < -1e-12 || theta > std::numbers::pi / 2.0 + 1e-12)
        throw std::invalid_argument("theta must lie in [0, pi/2]");
    if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
    SystemModel m;
    m.omega = omega;
    m.theta = theta;
    m.energies << omega / 2.0, -omega / 2.0;
    const double s = std::sin(theta), c = std::cos(theta);
    m.coupling << 0.5 * s, 0.5 * c, 0.5 * c, -0.5 * s;
    return m;
}

double SystemModel::epsilon() const noexcept { return omega * std::sin(theta); }
double SystemModel::delta() const noexcept { return omega * std::cos(theta); }

Vec4 vec(const Mat2& rho) {
    Vec4 v;
    v << rho(0, 0), rho(0, 1), rho(1, 0), rho(1, 1);
    return v;
}

Mat2 unvec(const Vec4& v) {
    Mat2 rho;
    rho << v(0), v(1), v(2), v(3);
    return rho;
}

Mat4 left_mult(const Mat2& X) {
    Mat4 S = Mat4::Zero();
    for (int n = 0; n < 2; ++n)
        for (int m = 0; m < 2; ++m)
            for (int i = 0; i < 2; ++i) S(2 * n + m, 2 * i + m) = X(n, i);
    return S;
}

Mat4 right_mult(const Mat2& X) {
    Mat4 S = Mat4::Zero();
    for (int n = 0; n < 2; ++n)
        for (int m = 0; m < 2; ++m)
            for (int j = 0; j < 2; ++j) S(2 * n + m, 2 * n + j) = X(j, m);
    return S;
}

} // namespace tcl4
