// generators.cpp: L0, Redfield L2, and the F/C/R assembly of L4

#include "tcl4/generators.hpp"
#include "tcl4/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>

namespace tcl4 {

namespace {

constexpr cplx I{0.0, 1.0};

enum class Family { F, C, R, R_conj };

// One bath-operator evaluation, bound to rows of a Γ table.
struct KernelPlan {
    Family fam;
    const std::vector<cplx>* g1;    // Γ_ω1
    const std::vector<cplx>* g2;    // Γ_ω2
    const std::vector<cplx>* gb;    // Γ_{−ω2−ω3}
    const std::vector<cplx>* dg1;   // ∂Γ_ω1/∂ω
    double sigma;
    const std::vector<cplx>* phase; // e^{−iΣ k dt}
};

KernelPlan make_plan(const GammaTable& gt, Family fam, double w1, double w2, double w3,
                     const std::vector<cplx>* phase) {
    const double sigma = w1 + w2 + w3;
    KernelPlan p;
    p.fam = fam;
    p.g1 = &gt.gamma(gt.index_of(w1));
    p.g2 = &gt.gamma(gt.index_of(w2));
    p.dg1 = &gt.dgamma(gt.index_of(w1));
    p.gb = std::abs(sigma) < resonance_threshold ? p.g1 : &gt.gamma(gt.index_of(-w2 - w3));
    p.sigma = sigma;
    p.phase = phase;
    return p;
}

cplx evaluate(const KernelPlan& p, std::size_t j, double dt) {
    const auto& g1 = *p.g1;
    const auto& g2 = *p.g2;
    const auto& ph = *p.phase;
    const cplx a = g1[j];
    const cplx b = g2[j];
    cplx sum = 0.0;
    switch (p.fam) {
        case Family::F:
            for (std::size_t k = 1; k < j; ++k) sum += (a - g1[k]) * (b - g2[j - k]) * ph[k];
            break;
        case Family::C: {
            const cplx bc = std::conj(b);
            for (std::size_t k = 1; k < j; ++k)
                sum += (a - g1[k]) * (bc - std::conj(g2[j - k])) * ph[k];
            break;
        }
        case Family::R:
            if (j > 0) sum = 0.5 * a * b;
            for (std::size_t k = 1; k < j; ++k) sum += (a - g1[k]) * (b - g2[k]) * ph[k];
            break;
        case Family::R_conj: {
            const cplx bc = std::conj(b);
            if (j > 0) sum = 0.5 * a * bc;
            for (std::size_t k = 1; k < j; ++k)
                sum += (a - g1[k]) * (bc - std::conj(g2[k])) * ph[k];
            break;
        }
    }
    const cplx G2 = (p.fam == Family::F || p.fam == Family::R) ? b : std::conj(b);
    const cplx boundary = std::abs(p.sigma) < resonance_threshold
                              ? -I * G2 * (*p.dg1)[j]
                              : I * G2 * ((*p.gb)[j] - a) / p.sigma;
    return -dt * sum + boundary;
}

std::vector<cplx> phase_row(double sigma, double dt, std::size_t n) {
    std::vector<cplx> ph(n + 1);
    for (std::size_t k = 0; k <= n; ++k) ph[k] = std::polar(1.0, -sigma * dt * double(k));
    return ph;
}

std::vector<double> bohr_set(const Eigen::Vector2d& E) {
    std::vector<double> w;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) w.push_back(E(a) - E(b));
    std::sort(w.begin(), w.end());
    w.erase(std::unique(w.begin(), w.end(),
                        [](double x, double y) { return std::abs(x - y) < GammaTable::freq_tol; }),
            w.end());
    return w;
}

long long freq_key(double w) { return std::llround(w / GammaTable::freq_tol); }

// Bath operators whose signed sum gives a pairing integral with x = c.
struct Combo {
    Family fam;
    std::array<double, 3> w;
    double sign;
};

std::vector<Combo> derived_combos(Pairing p, Kernel y, const std::array<double, 3>& nu) {
    const double n1 = nu[0], n2 = nu[1], n3 = nu[2];
    if (p == Pairing::crossed_02_13) {
        if (y == Kernel::c)
            return {{Family::F, {-n2, -n3, n1 + n2 + 2 * n3}, 1.0},
                    {Family::R, {-n2, n1, n2 + n3}, -1.0}};
        return {{Family::C, {-n2, n3, n1 + n2}, 1.0},
                {Family::R_conj, {-n2, -n1, 2 * n1 + n2 + n3}, -1.0}};
    }
    if (y == Kernel::c) return {{Family::R, {-n3, n1, n2 + n3}, 1.0}};
    return {{Family::R_conj, {-n3, -n1, 2 * n1 + n2 + n3}, 1.0}};
}

std::vector<Combo> pairing_combos(Pairing p, Kernel y, const std::array<double, 3>& nu,
                                  Tcl4Reading reading) {
    auto out = derived_combos(p, y, nu);
    if (reading == Tcl4Reading::derived) return out;
    for (auto& cb : out) {
        if (cb.fam != Family::C && cb.fam != Family::R_conj) continue;
        if (reading == Tcl4Reading::unconjugated) {
            cb.fam = cb.fam == Family::C ? Family::F : Family::R;
        } else {   // transposed: conjugated kernel replaced by swapping the first two indices
            cb.fam = cb.fam == Family::C ? Family::F : Family::R;
            std::swap(cb.w[0], cb.w[1]);
        }
    }
    return out;
}

Kernel flip(Kernel k) { return k == Kernel::c ? Kernel::c_conj : Kernel::c; }

Mat4 hermitian_mirror(const Mat4& H) {
    Mat4 out;
    for (int n = 0; n < 2; ++n)
        for (int m = 0; m < 2; ++m)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    out(2 * n + m, 2 * i + j) = std::conj(H(2 * m + n, 2 * j + i));
    return out;
}

} // namespace

std::size_t grid_index(double t, double dt, std::size_t n) {
    if (!(dt > 0.0) || !std::isfinite(t) || t < 0.0)
        throw std::invalid_argument("grid_index: invalid time or step");
    const double x = t / dt;
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9 * std::max(1.0, x) || r > double(n))
        throw std::out_of_range("time " + std::to_string(t) + " is not on the generator grid");
    return std::size_t(r);
}

Mat4 l0(const SystemModel& sys) {
    Mat4 L = Mat4::Zero();
    for (int n = 0; n < 2; ++n)
        for (int m = 0; m < 2; ++m) L(2 * n + m, 2 * n + m) = -I * sys.bohr(n, m);
    return L;
}

Mat4 l2(const SystemModel& sys, const GammaTable& gt, std::size_t j) {
    if (j > gt.n()) throw std::out_of_range("l2: grid index beyond Γ table");
    const auto& A = sys.coupling;
    auto G = [&](int a, int b) { return gt.value(sys.bohr(a, b), j); };
    Mat4 L = Mat4::Zero();
    for (int n = 0; n < 2; ++n)
        for (int m = 0; m < 2; ++m)
            for (int i = 0; i < 2; ++i)
                for (int jj = 0; jj < 2; ++jj) {
                    cplx v = A(n, i) * A(jj, m) * (G(i, n) + std::conj(G(jj, m)));
                    for (int k = 0; k < 2; ++k) {
                        if (jj == m) v -= A(n, k) * A(k, i) * G(i, k);
                        if (n == i) v -= A(jj, k) * A(k, m) * std::conj(G(jj, k));
                    }
                    L(2 * n + m, 2 * i + jj) = v;
                }
    return L;
}

Superoperator l2(const SystemModel& sys, const GammaTable& gt, double t) {
    const std::size_t j = grid_index(t, gt.dt(), gt.n());
    return {l2(sys, gt, j), t, Order::l2};
}

BathFCR bath_FCR(const GammaTable& gt, double w1, double w2, double w3, std::size_t j) {
    if (j > gt.n()) throw std::out_of_range("bath_FCR: grid index beyond Γ table");
    const auto ph = phase_row(w1 + w2 + w3, gt.dt(), j);
    auto eval = [&](Family f) { return evaluate(make_plan(gt, f, w1, w2, w3, &ph), j, gt.dt()); };
    return {eval(Family::F), eval(Family::C), eval(Family::R), eval(Family::R_conj)};
}

std::vector<double> required_frequencies(const SystemModel& sys, int order) {
    const auto bohr = bohr_set(sys.energies);
    std::vector<double> w = bohr;
    if (order >= 4) {
        for (Pairing p : {Pairing::crossed_02_13, Pairing::crossed_03_12})
            for (Kernel y : {Kernel::c, Kernel::c_conj})
                for (double a : bohr)
                    for (double b : bohr)
                        for (double c : bohr)
                            for (auto r : {Tcl4Reading::derived, Tcl4Reading::unconjugated,
                                           Tcl4Reading::transposed})
                                for (const auto& cb : pairing_combos(p, y, {a, b, c}, r)) {
                                    w.push_back(cb.w[0]);
                                    w.push_back(cb.w[1]);
                                    w.push_back(-cb.w[1] - cb.w[2]);
                                }
    }
    std::sort(w.begin(), w.end());
    w.erase(std::unique(w.begin(), w.end(),
                        [](double x, double y) { return std::abs(x - y) < GammaTable::freq_tol; }),
            w.end());
    return w;
}

std::vector<Tcl4Term> l4_structure(const SystemModel& sys) {
    const auto& A = sys.coupling;
    const Mat2 Ac = A.cast<cplx>();
    const Mat4 M0 = left_mult(Ac);

    using Key = std::tuple<int, int, int, double, double, double>;
    std::map<Key, Mat4> acc;

    Mat2 elem[4];
    double nu_of[4];
    for (int e = 0; e < 4; ++e) {
        const int a = e / 2, b = e % 2;
        elem[e] = Mat2::Zero();
        elem[e](a, b) = A(a, b);
        nu_of[e] = sys.bohr(a, b);
    }
    auto kernel_of = [](int side) { return side == 0 ? Kernel::c : Kernel::c_conj; };

    for (int sides = 0; sides < 8; ++sides) {
        const int s1 = (sides >> 2) & 1, s2 = (sides >> 1) & 1, s3 = sides & 1;  // 0 left, 1 right
        const double sgn = (s1 ? -1.0 : 1.0) * (s2 ? -1.0 : 1.0) * (s3 ? -1.0 : 1.0);
        for (int e1 = 0; e1 < 4; ++e1)
            for (int e2 = 0; e2 < 4; ++e2)
                for (int e3 = 0; e3 < 4; ++e3) {
                    if (elem[e1](e1 / 2, e1 % 2) == 0.0 || elem[e2](e2 / 2, e2 % 2) == 0.0 ||
                        elem[e3](e3 / 2, e3 % 2) == 0.0)
                        continue;
                    const Mat4 M1 = s1 ? right_mult(elem[e1]) : left_mult(elem[e1]);
                    const Mat4 M2 = s2 ? right_mult(elem[e2]) : left_mult(elem[e2]);
                    const Mat4 M3 = s3 ? right_mult(elem[e3]) : left_mult(elem[e3]);
                    const Mat4 S0123 = M0 * M1 * M2 * M3;
                    const Mat4 S0213 = M0 * M2 * M1 * M3;
                    const Mat4 S0312 = M0 * M3 * M1 * M2;
                    const double n1 = nu_of[e1], n2 = nu_of[e2], n3 = nu_of[e3];

                    const Key ka{0, int(kernel_of(s2)), int(kernel_of(s3)), n1, n2, n3};
                    const Key kb{1, int(kernel_of(s3)), int(kernel_of(s2)), n1, n2, n3};
                    auto add = [&](const Key& k, const Mat4& m) {
                        auto it = acc.find(k);
                        if (it == acc.end())
                            acc.emplace(k, m);
                        else
                            it->second += m;
                    };
                    add(ka, sgn * (S0123 - S0213));
                    add(kb, sgn * (S0123 - S0312));
                }
    }

    std::vector<Tcl4Term> out;
    out.reserve(acc.size());
    for (const auto& [k, m] : acc) {
        if (m.isZero(0.0)) continue;
        Tcl4Term t;
        t.pairing = std::get<0>(k) == 0 ? Pairing::crossed_02_13 : Pairing::crossed_03_12;
        t.x = Kernel(std::get<1>(k));
        t.y = Kernel(std::get<2>(k));
        t.nu = {std::get<3>(k), std::get<4>(k), std::get<5>(k)};
        t.coeff = m;
        out.push_back(t);
    }
    return out;
}

Tcl4Integrals::Tcl4Integrals(const GammaTable& gt, const Eigen::Vector2d& energies, std::size_t n,
                             Tcl4Reading reading)
    : bohr_(bohr_set(energies)), n_(n), reading_(reading) {
    if (n > gt.n()) throw std::out_of_range("Tcl4Integrals: grid beyond Γ table");
    const double dt = gt.dt();
    const std::size_t M = bohr_.size();

    // distinct bath operators and, per base integral, the signed combination
    using KKey = std::tuple<int, long long, long long, long long>;
    std::map<KKey, std::size_t> kindex;
    std::vector<std::pair<Family, std::array<double, 3>>> kernels;
    std::vector<std::vector<std::pair<std::size_t, double>>> recipe;

    const std::size_t nslots = 4 * M * M * M;
    recipe.resize(nslots);
    for (Pairing p : {Pairing::crossed_02_13, Pairing::crossed_03_12})
        for (Kernel y : {Kernel::c, Kernel::c_conj})
            for (std::size_t a = 0; a < M; ++a)
                for (std::size_t b = 0; b < M; ++b)
                    for (std::size_t c = 0; c < M; ++c) {
                        const std::array<double, 3> nu{bohr_[a], bohr_[b], bohr_[c]};
                        auto& r = recipe[slot(p, y, nu)];
                        for (const auto& cb : pairing_combos(p, y, nu, reading)) {
                            const KKey key{int(cb.fam), freq_key(cb.w[0]), freq_key(cb.w[1]),
                                           freq_key(cb.w[2])};
                            auto [it, fresh] = kindex.emplace(key, kernels.size());
                            if (fresh) kernels.emplace_back(cb.fam, cb.w);
                            r.emplace_back(it->second, cb.sign);
                        }
                    }

    std::map<long long, std::vector<cplx>> phases;
    for (const auto& [fam, w] : kernels) {
        const double s = w[0] + w[1] + w[2];
        phases.try_emplace(freq_key(s), phase_row(s, dt, n));
    }
    std::vector<KernelPlan> plans;
    plans.reserve(kernels.size());
    for (const auto& [fam, w] : kernels)
        plans.push_back(make_plan(gt, fam, w[0], w[1], w[2], &phases.at(freq_key(w[0] + w[1] + w[2]))));

    base_.assign(nslots, std::vector<cplx>(n + 1));
    parallel_for(n + 1, [&](std::size_t j) {
        std::vector<cplx> kv(plans.size());
        for (std::size_t k = 0; k < plans.size(); ++k) kv[k] = evaluate(plans[k], j, dt);
        for (std::size_t s = 0; s < nslots; ++s) {
            cplx v = 0.0;
            for (const auto& [k, sign] : recipe[s]) v += sign * kv[k];
            base_[s][j] = v;
        }
    });
}

std::size_t Tcl4Integrals::slot(Pairing p, Kernel y, const std::array<double, 3>& nu) const {
    const std::size_t M = bohr_.size();
    auto idx = [&](double w) {
        auto it = std::lower_bound(bohr_.begin(), bohr_.end(), w - GammaTable::freq_tol);
        if (it == bohr_.end() || std::abs(*it - w) > GammaTable::freq_tol)
            throw std::out_of_range("Tcl4Integrals: frequency is not a Bohr frequency");
        return std::size_t(it - bohr_.begin());
    };
    const std::size_t head = std::size_t(p == Pairing::crossed_03_12) * 2 + std::size_t(y == Kernel::c_conj);
    return ((head * M + idx(nu[0])) * M + idx(nu[1])) * M + idx(nu[2]);
}

cplx Tcl4Integrals::value(Pairing p, Kernel x, Kernel y, const std::array<double, 3>& nu,
                          std::size_t j) const {
    if (j > n_) throw std::out_of_range("Tcl4Integrals: grid index out of range");
    if (x == Kernel::c) return base_[slot(p, y, nu)][j];
    return std::conj(base_[slot(p, flip(y), {-nu[0], -nu[1], -nu[2]})][j]);
}

Mat4 l4(const std::vector<Tcl4Term>& structure, const Tcl4Integrals& integrals, std::size_t j) {
    Mat4 H = Mat4::Zero();
    for (const auto& t : structure) H += t.coeff * integrals.value(t.pairing, t.x, t.y, t.nu, j);
    return H + hermitian_mirror(H);
}

Mat4 l4(const SystemModel& sys, const GammaTable& gt, std::size_t j) {
    const Tcl4Integrals integrals(gt, sys.energies, j);
    return l4(l4_structure(sys), integrals, j);
}

Superoperator l4(const SystemModel& sys, const GammaTable& gt, double t) {
    const std::size_t j = grid_index(t, gt.dt(), gt.n());
    return {l4(sys, gt, j), t, Order::l4};
}

Mat4 GeneratorSeries::total(std::size_t j) const {
    Mat4 L = l0;
    if (!l2.empty()) L += l2.at(j);
    if (!l4.empty()) L += l4.at(j);
    return L;
}

Mat4 GeneratorSeries::component(Order o, std::size_t j) const {
    switch (o) {
        case Order::l0: return l0;
        case Order::l2: return l2.empty() ? Mat4::Zero().eval() : l2.at(j);
        case Order::l4: return l4.empty() ? Mat4::Zero().eval() : l4.at(j);
        case Order::total: return total(j);
    }
    return total(j);
}

GeneratorSeries generator_series(const SystemModel& sys, const GammaTable& gt, std::size_t n,
                                 int order, const Tcl4Integrals* integrals) {
    if (order != 0 && order != 2 && order != 4)
        throw std::invalid_argument("order must be one of {0, 2, 4}");
    GeneratorSeries s;
    s.dt = gt.dt();
    s.n = n;
    s.order = order;
    s.sys = sys;
    s.l0 = l0(sys);
    if (order == 0) return s;
    if (n > gt.n()) throw std::out_of_range("generator_series: grid beyond Γ table");

    s.l2.resize(n + 1);
    for (std::size_t j = 0; j <= n; ++j) s.l2[j] = l2(sys, gt, j);
    if (order == 4) {
        Tcl4Integrals local;
        if (!integrals) {
            local = Tcl4Integrals(gt, sys.energies, n);
            integrals = &local;
        } else if (integrals->n() < n) {
            throw std::out_of_range("generator_series: TCL4 integrals cover a shorter grid");
        }
        const auto structure = l4_structure(sys);
        s.l4.resize(n + 1);
        parallel_for(n + 1, [&](std::size_t j) { s.l4[j] = l4(structure, *integrals, j); });
    }
    return s;
}

double norm_ratio(const GeneratorSeries& series, std::size_t j) {
    if (series.l2.empty() || series.l4.empty())
        throw std::invalid_argument("norm_ratio: series must contain orders 2 and 4");
    const double d = series.l2.at(j).norm();
    if (d == 0.0) throw std::domain_error("norm_ratio: ratio undefined (L2 vanishes)");
    return series.l4.at(j).norm() / d;
}

void write_generator_csv(std::ostream& os, const GeneratorSeries& series, Order o) {
    os << "t,row,col,re,im\n" << std::setprecision(17);
    for (std::size_t j = 0; j <= series.n; ++j) {
        const Mat4 L = series.component(o, j);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                os << series.time(j) << ',' << r << ',' << c << ',' << L(r, c).real() << ','
                   << L(r, c).imag() << '\n';
    }
}

std::string to_string(Tcl4Reading r) {
    switch (r) {
        case Tcl4Reading::derived: return "derived";
        case Tcl4Reading::unconjugated: return "unconjugated";
        case Tcl4Reading::transposed: return "transposed";
    }
    return "?";
}

} // namespace tcl4
