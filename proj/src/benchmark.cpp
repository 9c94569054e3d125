#include "tcl4/benchmark.hpp"
#include "tcl4/generators.hpp"
#include "tcl4/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tcl4 {

double trace_distance(const Mat2& a, const Mat2& b) {
    const Eigen::JacobiSVD<Mat2> svd(a - b);
    return 0.5 * svd.singularValues().sum();
}

SplitDistance split_trace_distance(const Mat2& a, const Mat2& b) {
    const Mat2 d = a - b;
    return {0.5 * (std::abs(d(0, 0)) + std::abs(d(1, 1))), 0.5 * (std::abs(d(0, 1)) + std::abs(d(1, 0)))};
}

Mat2 state_at(const Trajectory& traj, double t) {
    const auto& ts = traj.times;
    if (ts.empty()) throw std::invalid_argument("state_at: empty trajectory");
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    if (t < ts.front() - tol || t > ts.back() + tol)
        throw std::out_of_range("state_at: t = " + std::to_string(t) + " outside trajectory");
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    if (it == ts.end()) return traj.states.back();
    const std::size_t k = std::size_t(it - ts.begin());
    if (std::abs(*it - t) <= tol || k == 0) return traj.states[k];
    const double w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
    return (1.0 - w) * traj.states[k - 1] + w * traj.states[k];
}

double time_avg_trace_distance(const Trajectory& a, const Trajectory& b, double t_end) {
    if (!(t_end > 0.0)) throw std::invalid_argument("time_avg_trace_distance: t_end must be > 0");
    const double tol = 1e-9 * std::max(1.0, t_end);
    if (a.times.empty() || b.times.empty() || a.times.back() < t_end - tol || b.times.back() < t_end - tol)
        throw std::out_of_range("time_avg_trace_distance: t_end beyond trajectory");
    std::vector<double> ts;
    for (double t : a.times)
        if (t < t_end - tol) ts.push_back(t);
    ts.push_back(t_end);
    double sum = 0.0;
    double prev = trace_distance(state_at(a, ts[0]), state_at(b, ts[0]));
    for (std::size_t k = 1; k < ts.size(); ++k) {
        const double cur = trace_distance(state_at(a, ts[k]), state_at(b, ts[k]));
        sum += 0.5 * (ts[k] - ts[k - 1]) * (prev + cur);
        prev = cur;
    }
    return sum / t_end;
}

RelaxationFit fit_relaxation(const std::vector<double>& t, const std::vector<double>& y) {
    if (t.size() != y.size() || t.size() < 4)
        throw std::invalid_argument("fit_relaxation: need at least four samples");
    const std::size_t n = t.size();
    const Eigen::Map<const Eigen::VectorXd> tv(t.data(), Eigen::Index(n));
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), Eigen::Index(n));
    const double ynorm = std::max(yv.norm(), 1e-300);

    RelaxationFit fit;
    fit.b = y.back();
    fit.a = y.front() - fit.b;
    {
        // log-slope of |y − b| over the points that are still clearly above b
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int cnt = 0;
        const double floor = 1e-3 * std::abs(fit.a);
        for (std::size_t k = 0; k < n; ++k) {
            const double d = std::abs(y[k] - fit.b);
            if (d > floor && d > 0.0) {
                const double ly = std::log(d);
                sx += t[k], sy += ly, sxx += t[k] * t[k], sxy += t[k] * ly;
                ++cnt;
            }
        }
        const double den = cnt * sxx - sx * sx;
        fit.rate = (cnt >= 2 && den > 0.0) ? -(cnt * sxy - sx * sy) / den : 0.0;
        if (!(fit.rate > 0.0)) fit.rate = 1.0 / std::max(t.back() - t.front(), 1e-12);
    }

    auto residual_of = [&](double a, double r, double b) {
        return (a * (-r * tv.array()).exp() + b - yv.array()).matrix();
    };
    Eigen::VectorXd res = residual_of(fit.a, fit.rate, fit.b);
    double cost = res.squaredNorm();
    double mu = 1e-3;
    const int cap = 500;
    for (fit.iterations = 0; fit.iterations < cap; ++fit.iterations) {
        if (std::sqrt(cost) / ynorm < 1e-12) {
            fit.converged = true;
            break;
        }
        const Eigen::ArrayXd e = (-fit.rate * tv.array()).exp();
        Eigen::MatrixXd Jm(n, 3);
        Jm.col(0) = e.matrix();
        Jm.col(1) = (-fit.a * tv.array() * e).matrix();
        Jm.col(2).setOnes();
        const Eigen::Matrix3d JtJ = Jm.transpose() * Jm;
        const Eigen::Vector3d g = Jm.transpose() * res;
        bool improved = false;
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::Matrix3d Aug = JtJ;
            Aug.diagonal() += mu * JtJ.diagonal().cwiseMax(1e-300);
            const Eigen::Vector3d step = Aug.ldlt().solve(-g);
            const double a = fit.a + step(0), r = fit.rate + step(1), b = fit.b + step(2);
            const Eigen::VectorXd trial = residual_of(a, r, b);
            const double c = trial.squaredNorm();
            if (std::isfinite(c) && c <= cost) {
                const double rel_change = step.norm() / std::max(1.0, Eigen::Vector3d(fit.a, fit.rate, fit.b).norm());
                const double drop = cost - c;
                fit.a = a, fit.rate = r, fit.b = b;
                res = trial;
                cost = c;
                mu = std::max(mu * 0.3, 1e-15);
                improved = true;
                if (rel_change < 1e-14 || drop <= 1e-15 * cost) fit.converged = true;
                break;
            }
            mu *= 10.0;
        }
        if (!improved) {
            fit.converged = true;   // no descent direction left: stationary point
            break;
        }
        if (fit.converged) break;
    }
    fit.residual = std::sqrt(cost) / ynorm;
    return fit;
}

RelaxationFit fit_relaxation(const Trajectory& traj, int population_index) {
    if (population_index != 0 && population_index != 1)
        throw std::invalid_argument("fit_relaxation: population index must be 0 or 1");
    std::vector<double> y;
    y.reserve(traj.size());
    for (const auto& r : traj.states) y.push_back(r(population_index, population_index).real());
    return fit_relaxation(traj.times, y);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& origin, std::size_t line,
                    const std::string& column) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v))
        throw std::runtime_error(origin + ": line " + std::to_string(line) + ": column '" + column +
                                 "' is not a finite number ('" + s + "')");
    return v;
}

} // namespace

ReferenceTrace parse_reference_csv(std::istream& is, const std::string& origin) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error(origin + ": empty file");
    const auto header = split_csv(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t k = 0; k < header.size(); ++k) col[header[k]] = k;
    for (const char* need : {"t", "rho11_re", "rho22_re", "rho12_re", "rho12_im"})
        if (!col.count(need))
            throw std::runtime_error(origin + ": header is missing column '" + std::string(need) + "'");
    const bool has_min = col.count("min_eig") > 0;

    ReferenceTrace ref;
    ref.format_version = "1";
    Trajectory& tr = ref.trajectory;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw std::runtime_error(origin + ": line " + std::to_string(lineno) + ": expected " +
                                     std::to_string(header.size()) + " fields, got " +
                                     std::to_string(cells.size()));
        auto get = [&](const char* name) { return parse_double(cells[col.at(name)], origin, lineno, name); };
        const double t = get("t");
        if (!tr.times.empty() && !(t > tr.times.back()))
            throw std::runtime_error(origin + ": non-monotone time at line " + std::to_string(lineno));
        const double p1 = get("rho11_re"), p2 = get("rho22_re");
        if (std::abs(p1 + p2 - 1.0) > 1e-6)
            throw std::runtime_error(origin + ": line " + std::to_string(lineno) +
                                     ": trace deviates from 1 by more than 1e-6");
        const cplx c(get("rho12_re"), get("rho12_im"));
        Mat2 rho;
        rho << p1, c, std::conj(c), p2;
        tr.times.push_back(t);
        tr.states.push_back(rho);
        tr.min_eig.push_back(has_min ? get("min_eig") : min_eigenvalue(rho));
    }
    if (tr.times.size() < 2) throw std::runtime_error(origin + ": fewer than two samples");
    tr.dt = tr.times[1] - tr.times[0];
    return ref;
}

ReferenceTrace ingest_reference(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open reference file " + path);
    ReferenceTrace ref = parse_reference_csv(in, path);
    std::filesystem::path side(path);
    side.replace_extension(".json");
    if (std::filesystem::exists(side)) {
        std::ifstream js(side);
        nlohmann::json j;
        try {
            js >> j;
        } catch (const std::exception& e) {
            throw std::runtime_error(side.string() + ": malformed sidecar: " + e.what());
        }
        ref.source_label = j.value("source_label", std::string{});
        ref.format_version = j.value("format_version", ref.format_version);
        if (j.contains("solver_params")) ref.solver_params = j["solver_params"];
        ref.trajectory.meta = j;
    }
    return ref;
}

nlohmann::json BenchmarkResult::to_json() const {
    using nlohmann::json;
    auto split_json = [](const std::vector<SplitDistance>& v) {
        json a = json::array();
        for (const auto& s : v) a.push_back({{"d_pop", s.pop}, {"d_coh", s.coh}});
        return a;
    };
    auto violation_json = [](const std::optional<PositivityViolation>& v) -> json {
        if (!v) return nullptr;
        return {{"step", v->step}, {"time", v->time}, {"min_eig", v->min_eigenvalue}};
    };
    json cells_json = json::array();
    for (const auto& c : cells) {
        json j = {{"theta", c.theta}, {"T", c.temperature}, {"ok", c.ok}};
        if (!c.ok) {
            j["error"] = c.error;
            cells_json.push_back(j);
            continue;
        }
        j["t_star"] = c.t_star;
        j["tcl4_vs_tcl2"] = {{"split", split_json(c.split_24)}, {"d", c.d_24},
                             {"time_avg", c.avg_24}, {"max", c.max_24}};
        j["norm_ratio"] = c.norm_ratio;
        j["relaxation_rate"] = {{"tcl2", c.relaxation_rate_tcl2}, {"tcl4", c.relaxation_rate_tcl4}};
        j["first_positivity_violation"] = {{"tcl2", violation_json(c.violation_tcl2)},
                                           {"tcl4", violation_json(c.violation_tcl4)}};
        j["max_trace_error"] = c.max_trace_error;
        j["max_hermiticity_error"] = c.max_hermiticity_error;
        if (c.has_reference)
            j["reference"] = {{"time_avg_tcl2", c.avg_ref_2}, {"time_avg_tcl4", c.avg_ref_4},
                              {"difference", c.avg_ref_4 - c.avg_ref_2},
                              {"split_tcl2", split_json(c.split_ref_2)},
                              {"split_tcl4", split_json(c.split_ref_4)}};
        cells_json.push_back(j);
    }
    return {{"grid", {{"theta", thetas}, {"T", temperatures}}},
            {"t_star", t_star},
            {"t_end", t_end},
            {"cells", cells_json}};
}

void BenchmarkResult::write_csv(std::ostream& os) const {
    os << "theta,T,metric,value\n" << std::setprecision(17);
    for (const auto& c : cells) {
        auto row = [&](const std::string& m, double v) {
            os << c.theta << ',' << c.temperature << ',' << m << ',' << v << '\n';
        };
        if (!c.ok) {
            row("failed", 1.0);
            continue;
        }
        for (std::size_t k = 0; k < c.t_star.size(); ++k) {
            std::ostringstream suffix;
            suffix << "@" << c.t_star[k];
            row("d_pop_24" + suffix.str(), c.split_24[k].pop);
            row("d_coh_24" + suffix.str(), c.split_24[k].coh);
            row("d_24" + suffix.str(), c.d_24[k]);
            if (c.has_reference) {
                row("d_pop_ref2" + suffix.str(), c.split_ref_2[k].pop);
                row("d_coh_ref2" + suffix.str(), c.split_ref_2[k].coh);
                row("d_pop_ref4" + suffix.str(), c.split_ref_4[k].pop);
                row("d_coh_ref4" + suffix.str(), c.split_ref_4[k].coh);
            }
        }
        row("avg_24", c.avg_24);
        row("max_24", c.max_24);
        row("norm_ratio", c.norm_ratio);
        row("relaxation_rate_tcl2", c.relaxation_rate_tcl2);
        row("relaxation_rate_tcl4", c.relaxation_rate_tcl4);
        row("first_violation_tcl2", c.violation_tcl2 ? c.violation_tcl2->time : -1.0);
        row("first_violation_tcl4", c.violation_tcl4 ? c.violation_tcl4->time : -1.0);
        row("max_trace_error", c.max_trace_error);
        row("max_hermiticity_error", c.max_hermiticity_error);
        if (c.has_reference) {
            row("avg_ref_tcl2", c.avg_ref_2);
            row("avg_ref_tcl4", c.avg_ref_4);
            row("avg_ref_difference", c.avg_ref_4 - c.avg_ref_2);
        }
    }
}

namespace {

std::string cell_reference(const SweepConfig& cfg, std::size_t i, std::size_t j) {
    if (cfg.thetas.size() == 1 && cfg.temperatures.size() == 1 && !cfg.reference_path.empty())
        return cfg.reference_path;
    if (cfg.reference_dir.empty()) return {};
    const auto p = std::filesystem::path(cfg.reference_dir) /
                   ("cell_" + std::to_string(i) + "_" + std::to_string(j) + ".csv");
    return std::filesystem::exists(p) ? p.string() : std::string{};
}

void fill_cell(CellMetrics& c, const SweepConfig& cfg, const SystemModel& sys, const GammaTable& gt,
               const Tcl4Integrals& ints, std::size_t n, const std::string& ref_path) {
    const GeneratorSeries s2 = generator_series(sys, gt, n, 2);
    const GeneratorSeries s4 = generator_series(sys, gt, n, 4, &ints);
    const Mat2 rho0 = initial_state(sys.theta);
    const Trajectory t2 = propagate(s2, rho0, cfg.stride);
    const Trajectory t4 = propagate(s4, rho0, cfg.stride);
    const double t_end = std::min(cfg.t_end, t2.times.back());

    c.t_star = cfg.t_star;
    for (double ts : cfg.t_star) {
        const Mat2 a = state_at(t4, ts), b = state_at(t2, ts);
        c.split_24.push_back(split_trace_distance(a, b));
        c.d_24.push_back(trace_distance(a, b));
    }
    c.avg_24 = time_avg_trace_distance(t4, t2, t_end);
    for (std::size_t k = 0; k < t2.size(); ++k)
        c.max_24 = std::max(c.max_24, trace_distance(t4.states[k], t2.states[k]));
    c.norm_ratio = norm_ratio(s4, grid_index(std::min(cfg.norm_ratio_time, cfg.dt * double(n)), cfg.dt, n));
    c.relaxation_rate_tcl2 = fit_relaxation(t2, 0).rate;
    c.relaxation_rate_tcl4 = fit_relaxation(t4, 0).rate;
    c.violation_tcl2 = t2.first_violation;
    c.violation_tcl4 = t4.first_violation;
    for (const Trajectory* tr : {&t2, &t4})
        for (const Mat2& r : tr->states) {
            c.max_trace_error = std::max(c.max_trace_error, std::abs(r.trace() - 1.0));
            c.max_hermiticity_error = std::max(c.max_hermiticity_error, std::abs(r(0, 1) - std::conj(r(1, 0))));
        }

    if (ref_path.empty()) return;
    const ReferenceTrace ref = ingest_reference(ref_path);
    c.has_reference = true;
    c.avg_ref_2 = time_avg_trace_distance(t2, ref.trajectory, t_end);
    c.avg_ref_4 = time_avg_trace_distance(t4, ref.trajectory, t_end);
    for (double ts : cfg.t_star) {
        const Mat2 r = state_at(ref.trajectory, ts);
        c.split_ref_2.push_back(split_trace_distance(state_at(t2, ts), r));
        c.split_ref_4.push_back(split_trace_distance(state_at(t4, ts), r));
    }
}

} // namespace

BenchmarkResult sweep(const SweepConfig& cfg) {
    if (cfg.thetas.empty() || cfg.temperatures.empty())
        throw std::invalid_argument("sweep: empty θ or T list");
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("sweep: dt must be positive");
    const std::size_t n = std::size_t(std::llround(cfg.t_end / cfg.dt));

    BenchmarkResult out;
    out.thetas = cfg.thetas;
    out.temperatures = cfg.temperatures;
    out.t_star = cfg.t_star;
    out.t_end = cfg.t_end;
    const std::size_t nT = cfg.temperatures.size();
    out.cells.resize(cfg.thetas.size() * nT);
    for (std::size_t i = 0; i < cfg.thetas.size(); ++i)
        for (std::size_t j = 0; j < nT; ++j) {
            out.cells[i * nT + j].theta = cfg.thetas[i];
            out.cells[i * nT + j].temperature = cfg.temperatures[j];
        }

    for (std::size_t j = 0; j < nT; ++j) {
        auto fail_row = [&](const std::string& msg) {
            for (std::size_t i = 0; i < cfg.thetas.size(); ++i) {
                out.cells[i * nT + j].ok = false;
                out.cells[i * nT + j].error = msg;
            }
        };
        BathTables tables;
        Tcl4Integrals ints;
        try {
            SpectralDensity sd = cfg.bath;
            sd.temperature = cfg.temperatures[j];
            // the Bohr frequencies do not depend on θ
            const SystemModel probe = SystemModel::from_theta(cfg.thetas.front());
            const auto freqs = required_frequencies(probe, 4);
            tables = bath_tables(sd, cfg.dt, n, freqs, cfg.fft_n);
            ints = Tcl4Integrals(tables.gamma, probe.energies, n);
        } catch (const std::exception& e) {
            fail_row(std::string("bath tables: ") + e.what());
            continue;
        }
        parallel_for(cfg.thetas.size(), [&](std::size_t i) {
            CellMetrics& c = out.cells[i * nT + j];
            try {
                fill_cell(c, cfg, SystemModel::from_theta(cfg.thetas[i]), tables.gamma, ints, n,
                          cell_reference(cfg, i, j));
            } catch (const std::exception& e) {
                const double th = c.theta, T = c.temperature;
                c = CellMetrics{};
                c.theta = th;
                c.temperature = T;
                c.ok = false;
                c.error = e.what();
            }
        });
    }
    return out;
}

} // namespace tcl4
