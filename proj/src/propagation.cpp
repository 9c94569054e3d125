#include "tcl4/propagation.hpp"
#include "tcl4/benchmark.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

namespace tcl4 {

Mat2 initial_state(double theta) {
    const double s = std::sin(theta), c = std::cos(theta);
    Mat2 rho;
    rho << 0.5 * (1.0 + s), -0.5 * c, -0.5 * c, 0.5 * (1.0 - s);
    return rho;
}

double min_eigenvalue(const Mat2& rho) {
    const double a = rho(0, 0).real(), d = rho(1, 1).real();
    const cplx b = 0.5 * (rho(0, 1) + std::conj(rho(1, 0)));
    return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + std::norm(b));
}

Trajectory propagate(const GeneratorSeries& series, const Mat2& rho0, std::size_t stride) {
    if (stride == 0) throw std::invalid_argument("propagate: stride must be positive");
    if (stride > 1 && stride % 2 != 0)
        throw std::invalid_argument("propagate: stride must be 1 or even");
    const std::size_t steps = series.n / stride;
    const double h = series.dt * double(stride);

    Trajectory traj;
    traj.dt = h;
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    traj.min_eig.reserve(steps + 1);

    auto record = [&](std::size_t step, const Vec4& v) {
        const Mat2 rho = unvec(v);
        const double t = h * double(step);
        const double me = min_eigenvalue(rho);
        traj.times.push_back(t);
        traj.states.push_back(rho);
        traj.min_eig.push_back(me);
        if (!traj.first_violation && me < -positivity_tol)
            traj.first_violation = PositivityViolation{step, t, me};
    };

    Vec4 v = vec(rho0);
    record(0, v);

    // a constant diagonal generator is stepped with its exact exponential
    const bool diagonal = series.order == 0 && series.l0.isDiagonal(0.0);
    if (diagonal) {
        const Vec4 decay = series.l0.diagonal();
        for (std::size_t s = 0; s < steps; ++s) {
            const double t = h * double(s + 1);
            Vec4 w = vec(rho0);
            for (int k = 0; k < 4; ++k) w(k) *= std::exp(decay(k) * t);
            if (!w.allFinite())
                throw std::runtime_error("propagate: non-finite state at step " + std::to_string(s + 1));
            record(s + 1, w);
        }
    }

    Mat4 L_start = series.total(0);
    for (std::size_t s = 0; s < steps && !diagonal; ++s) {
        const std::size_t j0 = s * stride;
        const Mat4 L_end = series.total(j0 + stride);
        const Mat4 L_mid = stride == 1 ? Mat4(0.5 * (L_start + L_end)) : series.total(j0 + stride / 2);
        const Vec4 k1 = L_start * v;
        const Vec4 k2 = L_mid * (v + 0.5 * h * k1);
        const Vec4 k3 = L_mid * (v + 0.5 * h * k2);
        const Vec4 k4 = L_end * (v + h * k3);
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!v.allFinite())
            throw std::runtime_error("propagate: non-finite state at step " + std::to_string(s + 1));
        record(s + 1, v);
        L_start = L_end;
    }
    traj.meta["order"] = series.order;
    traj.meta["theta"] = series.sys.theta;
    traj.meta["stride"] = stride;
    traj.meta["picture"] = "schrodinger";
    traj.meta["basis"] = "eigenbasis";
    return traj;
}

double halve_step_check(const GeneratorSeries& series, const Mat2& rho0, std::size_t stride) {
    if (stride < 2 || stride % 2 != 0)
        throw std::invalid_argument("halve_step_check: stride must be even");
    const Trajectory coarse = propagate(series, rho0, 2 * stride);
    const Trajectory fine = propagate(series, rho0, stride);
    double worst = 0.0;
    for (std::size_t k = 0; k < coarse.size(); ++k)
        worst = std::max(worst, trace_distance(coarse.states[k], fine.states[2 * k]));
    return worst;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,rho11_re,rho22_re,rho12_re,rho12_im,min_eig\n" << std::setprecision(17);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Mat2& r = traj.states[k];
        os << traj.times[k] << ',' << r(0, 0).real() << ',' << r(1, 1).real() << ','
           << r(0, 1).real() << ',' << r(0, 1).imag() << ',' << traj.min_eig[k] << '\n';
    }
}

void write_trajectory_files(const std::string& stem, const Trajectory& traj,
                            const nlohmann::json& extra) {
    std::ofstream csv(stem + ".csv");
    if (!csv) throw std::runtime_error("cannot write " + stem + ".csv");
    write_trajectory_csv(csv, traj);

    nlohmann::json side = traj.meta;
    side["dt"] = traj.dt;
    side["steps"] = traj.size();
    if (traj.first_violation) {
        side["first_positivity_violation"] = {{"step", traj.first_violation->step},
                                              {"time", traj.first_violation->time},
                                              {"min_eig", traj.first_violation->min_eigenvalue}};
    } else {
        side["first_positivity_violation"] = nullptr;
    }
    for (auto it = extra.begin(); it != extra.end(); ++it) side[it.key()] = it.value();
    std::ofstream js(stem + ".json");
    if (!js) throw std::runtime_error("cannot write " + stem + ".json");
    js << std::setw(2) << side << '\n';
}

} // namespace tcl4
