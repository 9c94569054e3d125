#include "tcl4/system.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace tcl4;
using std::numbers::pi;

namespace {

Eigen::Matrix2d hamiltonian(double eps, double delta) {
    Eigen::Matrix2d H;
    H << -eps / 2, delta / 2, delta / 2, eps / 2;
    return H;
}

} // namespace

TEST_CASE("eigenbasis diagonalizes H_S") {
    for (int k = 0; k <= 8; ++k) {
        const double theta = k * pi / 16;
        const double eps = std::sin(theta), delta = std::cos(theta);
        auto eb = eigenbasis(eps, delta);
        CAPTURE(theta);
        CHECK((eb.V.transpose() * eb.V - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-14);
        Eigen::Matrix2d D = eb.V.transpose() * hamiltonian(eps, delta) * eb.V;
        CHECK(std::abs(D(0, 0) - 0.5) < 1e-14);
        CHECK(std::abs(D(1, 1) + 0.5) < 1e-14);
        CHECK(std::abs(D(0, 1)) < 1e-14);
        CHECK(eb.V(1, 1) > 0.0);
    }
}

TEST_CASE("eigenbasis special angles") {
    auto x = eigenbasis(0.0, 1.0);
    CHECK(x.E(0) == 0.5);
    CHECK(x.E(1) == -0.5);

    auto z = eigenbasis(1.0, 0.0);
    CHECK(z.E(0) == 0.5);
    // H_S = −σ_z/2: the upper level is the second basis state
    CHECK(std::abs(std::abs(z.V(1, 0)) - 1.0) < 1e-15);
    CHECK(std::abs(z.V(0, 1)) == doctest::Approx(1.0));
    CHECK(z.V(0, 0) == 0.0);

    CHECK_THROWS(eigenbasis(0.0, 0.0));
}

TEST_CASE("system model in the eigenbasis") {
    for (double theta : {0.0, pi / 20, pi / 4, pi / 2}) {
        auto sys = SystemModel::from_theta(theta);
        CHECK(sys.bohr(0, 1) == 1.0);
        CHECK(sys.epsilon() == doctest::Approx(std::sin(theta)));
        CHECK(sys.delta() == doctest::Approx(std::cos(theta)));
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sys.coupling);
        CHECK(es.eigenvalues()(0) == doctest::Approx(-0.5));
        CHECK(es.eigenvalues()(1) == doctest::Approx(0.5));
        CHECK(sys.coupling == sys.coupling.transpose());
    }
    CHECK_THROWS(SystemModel::from_theta(2.0));
    CHECK_THROWS(SystemModel::from_theta(-0.1));
}

TEST_CASE("coupling agrees with the rotated σ_z/2") {
    for (double theta : {0.1, pi / 4, 1.3}) {
        auto eb = eigenbasis(std::sin(theta), std::cos(theta));
        Eigen::Matrix2d sz;
        sz << 1, 0, 0, -1;
        Eigen::Matrix2d A = 0.5 * eb.V.transpose() * sz * eb.V;
        auto sys = SystemModel::from_theta(theta);
        // equal up to the overall sign of the coupling operator
        const double same = (A - sys.coupling).cwiseAbs().maxCoeff();
        const double flip = (A + sys.coupling).cwiseAbs().maxCoeff();
        CHECK(std::min(same, flip) < 1e-14);
    }
}

TEST_CASE("row-major vectorization and multiplication superoperators") {
    Mat2 rho, X;
    rho << cplx(0.3, 0), cplx(0.1, -0.2), cplx(0.1, 0.2), cplx(0.7, 0);
    X << cplx(1, 2), cplx(-0.5, 0.1), cplx(0.3, -1), cplx(2, 0);
    Vec4 v = vec(rho);
    CHECK(v(1) == rho(0, 1));
    CHECK(v(2) == rho(1, 0));
    CHECK(unvec(v) == rho);
    CHECK((unvec(left_mult(X) * v) - X * rho).norm() < 1e-15);
    CHECK((unvec(right_mult(X) * v) - rho * X).norm() < 1e-15);
}
