// oracle.cpp: exact diagonalization of the truncated spin-boson model

#include "tcl4/oracle.hpp"
#include "tcl4/benchmark.hpp"
#include "tcl4/generators.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tcl4 {

namespace {

constexpr cplx I{0.0, 1.0};

struct BathState {
    double weight;
    std::size_t index;
};

std::vector<BathState> initial_bath_states(const DiscreteBathSpec& spec) {
    std::vector<BathState> states{{1.0, 0}};
    std::size_t stride = 1;
    for (const auto& m : spec.modes) {
        std::vector<double> p(spec.fock_cut, 0.0);
        if (spec.temperature > 0.0) {
            double z = 0.0;
            for (int k = 0; k < spec.fock_cut; ++k) z += (p[k] = std::exp(-k * m.omega / spec.temperature));
            for (auto& v : p) v /= z;
        } else {
            p[0] = 1.0;
        }
        std::vector<BathState> next;
        for (const auto& s : states)
            for (int k = 0; k < spec.fock_cut; ++k)
                if (s.weight * p[k] > 1e-14) next.push_back({s.weight * p[k], s.index + std::size_t(k) * stride});
        states = std::move(next);
        stride *= std::size_t(spec.fock_cut);
    }
    double total = 0.0;
    for (const auto& s : states) total += s.weight;
    for (auto& s : states) s.weight /= total;
    return states;
}

Eigen::MatrixXd full_hamiltonian(const SystemModel& sys, const DiscreteBathSpec& spec) {
    const std::size_t D = spec.dimension() / 2;
    const std::size_t fc = std::size_t(spec.fock_cut);
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(D, D);
    Eigen::VectorXd hb = Eigen::VectorXd::Zero(D);
    for (std::size_t b = 0; b < D; ++b) {
        std::size_t rest = b, stride = 1;
        for (const auto& m : spec.modes) {
            const std::size_t nk = rest % fc;
            rest /= fc;
            hb(b) += m.omega * double(nk);
            if (nk + 1 < fc) {
                const std::size_t up = b + stride;
                const double amp = m.g * std::sqrt(double(nk + 1));
                X(up, b) += amp;
                X(b, up) += amp;
            }
            stride *= fc;
        }
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * D, 2 * D);
    for (int s = 0; s < 2; ++s) {
        for (std::size_t b = 0; b < D; ++b) H(s * D + b, s * D + b) = sys.energies(s) + hb(b);
        for (int r = 0; r < 2; ++r)
            if (sys.coupling(s, r) != 0.0) H.block(s * D, r * D, D, D) += sys.coupling(s, r) * X;
    }
    return H;
}

} // namespace

void DiscreteBathSpec::validate() const {
    for (const auto& m : modes)
        if (!(m.omega > 0.0)) throw std::invalid_argument("oracle: mode frequencies must be > 0");
    if (fock_cut < 2) throw std::invalid_argument("oracle: fock_cut must be >= 2");
    if (!(temperature >= 0.0)) throw std::invalid_argument("oracle: temperature must be >= 0");
    if (dimension() > dim_cap)
        throw std::invalid_argument("oracle: Hilbert dimension " + std::to_string(dimension()) +
                                    " exceeds cap " + std::to_string(dim_cap));
}

std::size_t DiscreteBathSpec::dimension() const {
    double d = 2.0;
    for (std::size_t k = 0; k < modes.size(); ++k) d *= double(fock_cut);
    return d > 1e15 ? std::numeric_limits<std::size_t>::max() : std::size_t(d);
}

DiscreteBathSpec DiscreteBathSpec::scaled(double s) const {
    DiscreteBathSpec out = *this;
    for (auto& m : out.modes) m.g *= std::sqrt(s);
    return out;
}

ExactPropagator exact_reduced_propagator(const SystemModel& sys, const DiscreteBathSpec& spec,
                                         const TimeGrid& grid) {
    spec.validate();
    const std::size_t dim = spec.dimension();
    const std::size_t D = dim / 2;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(full_hamiltonian(sys, spec));
    const Eigen::MatrixXd& V = eig.eigenvectors();
    const Eigen::VectorXd& lam = eig.eigenvalues();

    ExactPropagator out;
    out.grid = grid;
    out.P.assign(grid.n + 1, Mat4::Zero());
    out.Pdot.assign(grid.n + 1, Mat4::Zero());

    const std::size_t block = 64;
    for (const auto& bs : initial_bath_states(spec)) {
        // ψ_i(t) = V e^{−iλt} Vᵀ |i, bath⟩ for both system states, in time blocks
        for (std::size_t j0 = 0; j0 <= grid.n; j0 += block) {
            const std::size_t nb = std::min(block, grid.n + 1 - j0);
            Eigen::MatrixXd re[2], im[2], hre[2], him[2];
            for (int i = 0; i < 2; ++i) {
                const Eigen::VectorXd c = V.row(std::size_t(i) * D + bs.index).transpose();
                Eigen::MatrixXd cr(dim, nb), ci(dim, nb);
                for (std::size_t jj = 0; jj < nb; ++jj) {
                    const double t = grid.time(j0 + jj);
                    for (std::size_t k = 0; k < dim; ++k) {
                        cr(k, jj) = c(k) * std::cos(lam(k) * t);
                        ci(k, jj) = -c(k) * std::sin(lam(k) * t);
                    }
                }
                re[i] = V * cr;
                im[i] = V * ci;
                // −iHψ = V(−iλ ∘ coefficients)
                hre[i] = V * (lam.asDiagonal() * ci);
                him[i] = -(V * (lam.asDiagonal() * cr));
            }
            for (std::size_t jj = 0; jj < nb; ++jj) {
                Mat4& P = out.P[j0 + jj];
                Mat4& Pd = out.Pdot[j0 + jj];
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j)
                        for (int n = 0; n < 2; ++n)
                            for (int m = 0; m < 2; ++m) {
                                const auto a_re = re[i].col(jj).segment(n * D, D);
                                const auto a_im = im[i].col(jj).segment(n * D, D);
                                const auto b_re = re[j].col(jj).segment(m * D, D);
                                const auto b_im = im[j].col(jj).segment(m * D, D);
                                const auto ha_re = hre[i].col(jj).segment(n * D, D);
                                const auto ha_im = him[i].col(jj).segment(n * D, D);
                                const auto hb_re = hre[j].col(jj).segment(m * D, D);
                                const auto hb_im = him[j].col(jj).segment(m * D, D);
                                // Σ_b a conj(b)
                                const cplx pv(a_re.dot(b_re) + a_im.dot(b_im), a_im.dot(b_re) - a_re.dot(b_im));
                                const cplx d1(ha_re.dot(b_re) + ha_im.dot(b_im), ha_im.dot(b_re) - ha_re.dot(b_im));
                                const cplx d2(a_re.dot(hb_re) + a_im.dot(hb_im), a_im.dot(hb_re) - a_re.dot(hb_im));
                                P(2 * n + m, 2 * i + j) += bs.weight * pv;
                                Pd(2 * n + m, 2 * i + j) += bs.weight * (d1 + d2);
                            }
            }
        }
    }
    return out;
}

Trajectory exact_discrete_bath(const SystemModel& sys, const DiscreteBathSpec& spec,
                               const Mat2& rho0, const TimeGrid& grid) {
    const ExactPropagator prop = exact_reduced_propagator(sys, spec, grid);
    Trajectory traj;
    traj.dt = grid.dt;
    const Vec4 v0 = vec(rho0);
    for (std::size_t j = 0; j <= grid.n; ++j) {
        const Mat2 rho = unvec(prop.P[j] * v0);
        const double me = min_eigenvalue(rho);
        traj.times.push_back(grid.time(j));
        traj.states.push_back(rho);
        traj.min_eig.push_back(me);
        if (!traj.first_violation && me < -positivity_tol)
            traj.first_violation = PositivityViolation{j, grid.time(j), me};
    }
    traj.meta["solver"] = "exact_discrete_bath";
    traj.meta["theta"] = sys.theta;
    traj.meta["fock_cut"] = spec.fock_cut;
    traj.meta["modes"] = spec.modes.size();
    traj.meta["temperature"] = spec.temperature;
    return traj;
}

double truncation_error(const SystemModel& sys, const DiscreteBathSpec& spec, const Mat2& rho0,
                        const TimeGrid& grid) {
    DiscreteBathSpec finer = spec;
    finer.fock_cut += 1;
    const Trajectory a = exact_discrete_bath(sys, spec, rho0, grid);
    const Trajectory b = exact_discrete_bath(sys, finer, rho0, grid);
    double worst = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
        worst = std::max(worst, trace_distance(a.states[j], b.states[j]));
    return worst;
}

std::vector<Mat4> extract_exact_tcl_generator(const SystemModel& sys, const DiscreteBathSpec& spec,
                                              const TimeGrid& grid) {
    const ExactPropagator prop = exact_reduced_propagator(sys, spec, grid);
    std::vector<Mat4> L(grid.n + 1);
    for (std::size_t j = 0; j <= grid.n; ++j) {
        const Eigen::JacobiSVD<Mat4> svd(prop.P[j]);
        const auto& sv = svd.singularValues();
        if (!(sv(3) > 0.0) || sv(0) / sv(3) > 1e8)
            throw std::runtime_error("TCL generator singular at t = " + std::to_string(grid.time(j)));
        // L P = Ṗ  ⇔  Pᵀ Lᵀ = Ṗᵀ
        L[j] = prop.P[j].transpose().partialPivLu().solve(prop.Pdot[j].transpose()).transpose();
    }
    return L;
}

PerturbativeFit fit_orders(const std::vector<std::vector<Mat4>>& samples,
                           const std::vector<double>& scales, bool cubic_nuisance) {
    const std::size_t K = scales.size();
    const int p = cubic_nuisance ? 3 : 2;
    if (K < std::size_t(p) + 1 || samples.size() != K)
        throw std::invalid_argument("fit_perturbative_orders: need more scales than fit parameters");
    Eigen::MatrixXd X(K, p);
    for (std::size_t k = 0; k < K; ++k)
        for (int c = 0; c < p; ++c) X(k, c) = std::pow(scales[k], c + 1);
    const Eigen::MatrixXd pinv = X.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(K, K));

    const std::size_t nt = samples[0].size();
    PerturbativeFit fit;
    fit.l2.resize(nt);
    fit.l4.resize(nt);
    fit.residual.resize(nt);
    fit.flagged.resize(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        double worst = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < K; ++k) scale = std::max(scale, samples[k].at(j).cwiseAbs().maxCoeff());
        for (int e = 0; e < 16; ++e) {
            Eigen::VectorXcd y(K);
            for (std::size_t k = 0; k < K; ++k) y(k) = samples[k].at(j)(e / 4, e % 4);
            const Eigen::VectorXcd beta = pinv.cast<cplx>() * y;
            fit.l2[j](e / 4, e % 4) = beta(0);
            fit.l4[j](e / 4, e % 4) = beta(1);
            if (scale > 0.0) worst = std::max(worst, (y - X.cast<cplx>() * beta).cwiseAbs().maxCoeff() / scale);
        }
        fit.residual[j] = worst;
        fit.flagged[j] = worst > fit.residual_threshold;
    }
    return fit;
}

PerturbativeFit fit_perturbative_orders(const SystemModel& sys, const DiscreteBathSpec& spec,
                                        const TimeGrid& grid, const std::vector<double>& scales,
                                        bool cubic_nuisance) {
    const Mat4 L0 = l0(sys);
    std::vector<std::vector<Mat4>> samples;
    for (double s : scales) {
        auto L = extract_exact_tcl_generator(sys, spec.scaled(s), grid);
        for (auto& m : L) m -= L0;
        samples.push_back(std::move(L));
    }
    return fit_orders(samples, scales, cubic_nuisance);
}

double dephasing_exponent(const SpectralDensity& sd, double t) {
    sd.validate();
    if (!(t >= 0.0)) throw std::invalid_argument("dephasing_exponent: t must be >= 0");
    if (t == 0.0) return 0.0;
    if (sd.is_discrete()) {
        double g = 0.0;
        for (const auto& m : sd.modes) {
            const double coth = sd.temperature > 0.0 ? 1.0 / std::tanh(m.omega / (2.0 * sd.temperature)) : 1.0;
            const double s = std::sin(0.5 * m.omega * t);
            g += m.g * m.g * coth * 2.0 * s * s / (m.omega * m.omega);
        }
        return g;
    }

    using boost::math::quadrature::gauss_kronrod;
    // J coth / ω², finite at the origin
    auto weight = [&](double w) {
        if (w == 0.0) return std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(w)) return 0.0;
        return noise_integrand(sd, w) / (w * w);
    };
    auto body = [&](double w) {
        if (w == 0.0) return noise_integrand(sd, 0.0) * 0.5 * t * t;
        const double s = std::sin(0.5 * w * t);
        return weight(w) * 2.0 * s * s;
    };
    const double W = 20.0 * std::max(sd.omega_c, sd.temperature);
    const double chunk = std::min(W, 4.0 * 2.0 * std::numbers::pi / t);
    double err_total = 0.0, sum = 0.0;
    for (double a = 0.0; a < W; a += chunk) {
        double err = 0.0;
        sum += gauss_kronrod<double, 61>::integrate(body, a, std::min(W, a + chunk), 10, 1e-13, &err);
        err_total += err;
    }
    // tail: ∫_W^∞ g(ω)(1 − cos ωt), the oscillating part shifted to start at 0
    double err = 0.0;
    sum += gauss_kronrod<double, 61>::integrate(weight, W, std::numeric_limits<double>::infinity(), 15, 1e-13, &err);
    err_total += err;
    auto shifted = [&](double u) { return std::isfinite(u) ? weight(u + W) : 0.0; };
    boost::math::quadrature::ooura_fourier_cos<double> fc(1e-12);
    boost::math::quadrature::ooura_fourier_sin<double> fs(1e-12);
    const double c = fc.integrate(shifted, t).first;
    const double s = fs.integrate(shifted, t).first;
    sum -= std::cos(W * t) * c - std::sin(W * t) * s;
    if (!(err_total < 1e-8)) throw std::runtime_error("dephasing_exponent: quadrature did not converge");
    return sum / std::numbers::pi;
}

cplx pure_dephasing_coherence(const SpectralDensity& sd, double t, double omega) {
    return std::polar(std::exp(-dephasing_exponent(sd, t)), -omega * t);
}

cplx StationaryGamma::at(double w, double omega) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(omega));
    if (std::abs(w + omega) < tol) return minus;
    if (std::abs(w) < tol) return zero;
    if (std::abs(w - omega) < tol) return plus;
    throw std::out_of_range("StationaryGamma: frequency is not a Bohr frequency");
}

RelaxationParams relaxation_params(const StationaryGamma& g) {
    RelaxationParams p;
    p.J_plus = 0.5 * g.minus.real();
    p.J_minus = 0.5 * g.plus.real();
    p.J_zero = 0.5 * g.zero.real();
    p.S_plus = -0.5 * g.minus.imag();
    p.S_minus = -0.5 * g.plus.imag();
    p.S_zero = -0.5 * g.zero.imag();
    return p;
}

StationaryGamma stationary_gamma(const RelaxationParams& p) {
    StationaryGamma g;
    g.minus = cplx(2.0 * p.J_plus, -2.0 * p.S_plus);
    g.plus = cplx(2.0 * p.J_minus, -2.0 * p.S_minus);
    g.zero = cplx(2.0 * p.J_zero, -2.0 * p.S_zero);
    return g;
}

Mat4 bloch_unitary() {
    const double r = 1.0 / std::sqrt(2.0);
    Mat4 U;
    U << r, 0, 0, r,
         0, r, I * r, 0,
         0, r, -I * r, 0,
         r, 0, 0, -r;
    return U;
}

BlochGenerator bloch_redfield_bloch_basis(const SystemModel& sys, const StationaryGamma& g) {
    const Mat2 A = sys.coupling.cast<cplx>();
    Mat2 Lambda;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) Lambda(a, b) = A(a, b) * g.at(sys.bohr(b, a), sys.omega);
    const Mat2 Ld = Lambda.adjoint();
    const Mat4 D_br = left_mult(A) * right_mult(Ld) + left_mult(Lambda) * right_mult(A) -
                      left_mult(A * Lambda) - right_mult(Ld * A);
    BlochGenerator out;
    out.hilbert_schmidt = l0(sys) + D_br;
    const Mat4 U = bloch_unitary();
    const Mat4 B = U.adjoint() * out.hilbert_schmidt * U;
    out.matrix = B.real();
    out.params = relaxation_params(g);
    return out;
}

double overdamping_discriminant(double J_plus, double J_minus, double S_plus, double S_minus,
                                double splitting) {
    const double d = splitting;
    const double j = J_minus + J_plus;
    return j * j - 4.0 * (d * d - d * S_minus + d * S_plus);
}

RelaxationEigen relaxation_eigenvalues(double J_plus, double J_minus, double S_plus, double S_minus,
                                       double splitting) {
    const double d = splitting;
    const double j = J_plus + J_minus;
    Eigen::Matrix3d block;
    block << 0.0, d, 0.0,
             S_minus - S_plus - d, -j, 0.0,
             0.0, 0.0, -j;
    const Eigen::EigenSolver<Eigen::Matrix3d> es(block);
    RelaxationEigen out;
    for (int k = 0; k < 3; ++k) out.roots[k] = es.eigenvalues()(k);
    std::sort(out.roots.begin(), out.roots.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    // all roots real; the scale guards against round-off imaginary parts
    const double scale = std::max({std::abs(d), std::abs(j), std::abs(S_minus - S_plus), 1e-300});
    out.overdamped = std::all_of(out.roots.begin(), out.roots.end(),
                                 [&](cplx r) { return std::abs(r.imag()) <= 1e-9 * scale; });
    return out;
}

} // namespace tcl4
