// bath.cpp: Spectral densities, BCF (FFT and quadrature) and Γ tables

#include "tcl4/bath.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <fftw3.h>

namespace tcl4 {

namespace {

constexpr double pi = std::numbers::pi;
constexpr cplx I{0.0, 1.0};

void require_finite(double w, const char* what) {
    if (!std::isfinite(w)) throw std::domain_error(std::string(what) + ": non-finite frequency");
}

double continuum_J(const SpectralDensity& sd, double w) {
    return 2.0 * pi * sd.coupling * w * sd.cutoff_function(w);
}

// FFTW planning is not thread-safe.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n)
        : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
        if (!data) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    fftw_complex* data;
};

// ∫_0^t e^{ixs} ds
cplx phase_integral(double x, double t) {
    const double xt = x * t;
    if (std::abs(xt) < 0.1) {
        cplx term = t;   // k = 0
        cplx sum = term;
        for (int k = 1; k <= 14; ++k) {
            term *= I * xt / double(k + 1);
            sum += term;
        }
        return sum;
    }
    return (std::polar(1.0, xt) - 1.0) / (I * x);
}

// ∂/∂x ∫_0^t e^{ixs} ds = ∫_0^t i s e^{ixs} ds
cplx phase_integral_dx(double x, double t) {
    const double xt = x * t;
    if (std::abs(xt) < 0.1) {
        // Σ_k i (ixt)^k t² / (k! (k+2))
        cplx pw = 1.0;
        double fact = 1.0;
        cplx sum = 0.0;
        for (int k = 0; k <= 16; ++k) {
            if (k > 0) {
                pw *= I * xt;
                fact *= double(k);
            }
            sum += pw / (fact * double(k + 2));
        }
        return I * t * t * sum;
    }
    const cplx e = std::polar(1.0, xt);
    return (xt * e + I * (e - 1.0)) / (x * x);
}

} // namespace

const char* to_string(Cutoff c) noexcept {
    switch (c) {
        case Cutoff::drude: return "drude";
        case Cutoff::exponential: return "exponential";
    }
    return "unknown";
}

Cutoff cutoff_from_string(std::string_view s) {
    if (s == "drude") return Cutoff::drude;
    if (s == "exponential") return Cutoff::exponential;
    throw std::invalid_argument("cutoff must be one of {drude, exponential}, got '" +
                                std::string(s) + "'");
}

double SpectralDensity::cutoff_function(double w) const noexcept {
    switch (cutoff) {
        case Cutoff::drude: return omega_c / (omega_c * omega_c + w * w);
        case Cutoff::exponential: return std::exp(-w / omega_c);
    }
    return 0.0;
}

void SpectralDensity::validate() const {
    if (!(temperature >= 0.0) || !std::isfinite(temperature))
        throw std::invalid_argument("temperature must be >= 0");
    if (is_discrete()) {
        for (const auto& m : modes) {
            if (!(m.omega > 0.0) || !std::isfinite(m.omega))
                throw std::invalid_argument("discrete mode frequencies must be > 0");
            if (!std::isfinite(m.g)) throw std::invalid_argument("discrete mode g must be finite");
        }
        return;
    }
    if (!(coupling >= 0.0) || !std::isfinite(coupling))
        throw std::invalid_argument("coupling must be >= 0");
    if (!(omega_c > 0.0) || !std::isfinite(omega_c))
        throw std::invalid_argument("omega_c must be > 0");
}

SpectralDensity SpectralDensity::scaled(double s) const {
    SpectralDensity out = *this;
    out.coupling *= s;
    for (auto& m : out.modes) m.g *= std::sqrt(s);
    return out;
}

double bose(double w, double temperature) noexcept {
    if (temperature <= 0.0) return 0.0;
    return 1.0 / std::expm1(w / temperature);
}

double spectral_density(const SpectralDensity& sd, double w) {
    require_finite(w, "spectral_density");
    if (sd.is_discrete())
        throw std::invalid_argument("spectral_density: discrete baths have no continuum form");
    if (w > 0.0) return continuum_J(sd, w);
    if (w == 0.0) return 0.0;
    if (sd.temperature <= 0.0) return 0.0;
    return std::exp(w / sd.temperature) * continuum_J(sd, -w);
}

double thermal_noise_weight(const SpectralDensity& sd, double w) {
    require_finite(w, "thermal_noise_weight");
    if (sd.is_discrete())
        throw std::invalid_argument("thermal_noise_weight: discrete baths have no continuum form");
    const double T = sd.temperature;
    if (w == 0.0) return T > 0.0 ? 4.0 * pi * sd.coupling * T * sd.cutoff_function(0.0) : 0.0;
    if (T <= 0.0) return w > 0.0 ? 2.0 * continuum_J(sd, w) : 0.0;
    if (w > 0.0) return 2.0 * continuum_J(sd, w) / -std::expm1(-w / T);
    return 2.0 * continuum_J(sd, -w) / std::expm1(-w / T);
}

double noise_integrand(const SpectralDensity& sd, double w) {
    const double T = sd.temperature;
    if (T <= 0.0) return w > 0.0 ? continuum_J(sd, w) : 0.0;
    if (w == 0.0) return 4.0 * pi * sd.coupling * T * sd.cutoff_function(0.0);
    return continuum_J(sd, w) / std::tanh(w / (2.0 * T));
}

std::size_t default_fft_size(double dt, double min_span) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    std::size_t N = 1;
    while (double(N) * dt < min_span) N <<= 1;
    return N;
}

BathCorrelationTable bcf_fft(const SpectralDensity& sd, std::size_t N, double dt,
                             double horizon) {
    sd.validate();
    if (sd.is_discrete())
        throw std::invalid_argument("bcf_fft: use discrete_bath_functions for discrete modes");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (N < 2) throw std::invalid_argument("bcf_fft: N must be >= 2");
    if (double(N) * dt < horizon) throw std::runtime_error("bcf_fft: grid too short");

    const std::size_t M = 2 * N;
    const double domega = pi / (double(N) * dt);
    FftwBuffer in(M), out(M);
    for (std::size_t m = 0; m < M; ++m) {
        double s;
        if (m < N) {
            s = thermal_noise_weight(sd, double(m) * domega);
        } else if (m == N) {
            const double wm = double(N) * domega;
            s = 0.5 * (thermal_noise_weight(sd, wm) + thermal_noise_weight(sd, -wm));
        } else {
            s = thermal_noise_weight(sd, -double(M - m) * domega);
        }
        in.data[m][0] = s;
        in.data[m][1] = 0.0;
    }
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        plan = fftw_plan_dft_1d(int(M), in.data, out.data, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(plan);
    }

    BathCorrelationTable table;
    table.dt = dt;
    table.provenance = BcfProvenance::fft;
    table.fft = FftParams{N, pi / dt, domega};
    table.values.resize(N + 1);
    const double scale = domega / (2.0 * pi);
    for (std::size_t j = 0; j <= N; ++j)
        table.values[j] = scale * cplx(out.data[j][0], out.data[j][1]);
    // C(0) is real for a real spectrum; drop the rounding residue.
    table.values[0] = cplx(table.values[0].real(), 0.0);
    return table;
}

cplx bcf_quadrature(const SpectralDensity& sd, double t) {
    sd.validate();
    if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("bcf_quadrature: t must be >= 0");
    if (sd.is_discrete()) {
        cplx c = 0.0;
        for (const auto& m : sd.modes) {
            const double coth = sd.temperature > 0.0 ? 1.0 / std::tanh(m.omega / (2.0 * sd.temperature)) : 1.0;
            c += m.g * m.g * cplx(coth * std::cos(m.omega * t), -std::sin(m.omega * t));
        }
        return c;
    }

    using boost::math::quadrature::gauss_kronrod;
    constexpr double abs_tol = 1e-10;
    constexpr double floor = 1e-14;
    double err_total = 0.0;

    // Integrate f over [0, upper] in chunks short enough to resolve cos/sin(ωt).
    auto integrate_finite = [&](auto f, double upper) {
        const double chunk = t > 0.0 ? std::min(upper, 8.0 * 2.0 * pi / t) : upper;
        double sum = 0.0;
        for (double a = 0.0; a < upper; a += chunk) {
            const double b = std::min(upper, a + chunk);
            double err = 0.0;
            sum += gauss_kronrod<double, 61>::integrate(f, a, b, 10, 1e-13, &err);
            err_total += err;
        }
        return sum;
    };
    // first ω beyond which |f| stays below the floor (checked on a doubling ladder)
    auto upper_limit = [&](auto envelope, double start) {
        double w = start;
        for (int k = 0; k < 200 && envelope(w) > floor; ++k) w *= 1.25;
        if (envelope(w) > floor) throw std::runtime_error("bcf_quadrature: integrand does not decay");
        return w;
    };

    const double T = sd.temperature;
    double re = 0.0, im = 0.0;
    if (sd.cutoff == Cutoff::exponential) {
        const double W = upper_limit([&](double w) { return noise_integrand(sd, w); }, sd.omega_c);
        re = integrate_finite([&](double w) { return noise_integrand(sd, w) * std::cos(w * t); }, W);
        if (t > 0.0)
            im = -integrate_finite([&](double w) { return continuum_J(sd, w) * std::sin(w * t); }, W);
    } else {
        // Drude: J ~ 1/ω, so the zero-point part only converges as a Fourier integral.
        if (t == 0.0)
            throw std::runtime_error(
                "bcf_quadrature: Drude correlation function diverges at t = 0 (no convergence)");
        // ooura nodes reach w = inf, where w·f(w) is inf·0
        auto J = [&](double w) { return std::isfinite(w) ? continuum_J(sd, w) : 0.0; };
        // Ooura reports a NaN relative error when the transform is tiny; the
        // spread between a tight and a loose run then bounds the absolute error.
        auto transform = [&](auto tight, auto loose) {
            const auto [v, rel] = tight.integrate(J, t);
            if (std::isfinite(rel)) {
                err_total += std::abs(v) * rel;
            } else {
                const auto [v2, rel2] = loose.integrate(J, t);
                err_total += std::abs(v - v2);
            }
            return v;
        };
        using boost::math::quadrature::ooura_fourier_cos;
        using boost::math::quadrature::ooura_fourier_sin;
        const double c_val = transform(ooura_fourier_cos<double>(1e-13), ooura_fourier_cos<double>(1e-9));
        const double s_val = transform(ooura_fourier_sin<double>(1e-13), ooura_fourier_sin<double>(1e-9));
        re = c_val;
        im = -s_val;
        if (T > 0.0) {
            // thermal part 2 J n(ω) decays exponentially
            auto thermal = [&](double w) {
                return w == 0.0 ? 2.0 * pi * sd.coupling * 2.0 * T * sd.cutoff_function(0.0)
                                : 2.0 * J(w) * bose(w, T);
            };
            const double W = upper_limit(thermal, std::max(T, 1.0));
            re += integrate_finite([&](double w) { return thermal(w) * std::cos(w * t); }, W);
        }
    }
    if (!(err_total / pi <= abs_tol))
        throw std::runtime_error("bcf_quadrature: tolerance 1e-10 not met (error estimate " +
                                 std::to_string(err_total / pi) + ")");
    return cplx(re, im) / pi;
}

GammaTable::GammaTable(std::vector<double> freqs, double dt, std::size_t n)
    : freqs_(std::move(freqs)), dt_(dt), n_(n) {
    for (double w : freqs_) require_finite(w, "gamma_table");
    std::sort(freqs_.begin(), freqs_.end());
    freqs_.erase(std::unique(freqs_.begin(), freqs_.end(),
                             [](double a, double b) { return std::abs(a - b) < freq_tol; }),
                 freqs_.end());
    gamma_.assign(freqs_.size(), std::vector<cplx>(n + 1));
    dgamma_.assign(freqs_.size(), std::vector<cplx>(n + 1));
}

std::size_t GammaTable::index_of(double w) const {
    auto it = std::lower_bound(freqs_.begin(), freqs_.end(), w - freq_tol);
    if (it == freqs_.end() || std::abs(*it - w) > freq_tol)
        throw std::out_of_range("GammaTable: frequency " + std::to_string(w) + " not in table");
    return std::size_t(it - freqs_.begin());
}

bool GammaTable::contains(double w) const noexcept {
    auto it = std::lower_bound(freqs_.begin(), freqs_.end(), w - freq_tol);
    return it != freqs_.end() && std::abs(*it - w) <= freq_tol;
}

GammaTable gamma_table(const BathCorrelationTable& bcf, std::span<const double> freqs,
                       std::size_t n) {
    if (bcf.size() < n + 1) throw std::runtime_error("gamma_table: grid too short");
    GammaTable gt(std::vector<double>(freqs.begin(), freqs.end()), bcf.dt, n);
    const double dt = bcf.dt;
    for (std::size_t f = 0; f < gt.freqs().size(); ++f) {
        const double w = gt.freqs()[f];
        auto& g = gt.gamma(f);
        auto& dg = gt.dgamma(f);
        g[0] = 0.0;
        dg[0] = 0.0;
        cplx prev = bcf.values[0];
        cplx prev_d = 0.0;
        for (std::size_t j = 1; j <= n; ++j) {
            const double t = dt * double(j);
            const cplx cur = bcf.values[j] * std::polar(1.0, w * t);
            const cplx cur_d = I * t * cur;
            g[j] = g[j - 1] + 0.5 * dt * (prev + cur);
            dg[j] = dg[j - 1] + 0.5 * dt * (prev_d + cur_d);
            prev = cur;
            prev_d = cur_d;
        }
    }
    return gt;
}

DiscreteBathTables discrete_bath_functions(std::span<const BathMode> modes, double temperature,
                                           double dt, std::size_t n,
                                           std::span<const double> freqs) {
    for (const auto& m : modes)
        if (!(m.omega > 0.0)) throw std::invalid_argument("discrete modes require omega > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");

    DiscreteBathTables out;
    out.bcf.dt = dt;
    out.bcf.provenance = BcfProvenance::closed_form_discrete;
    out.bcf.values.assign(n + 1, cplx{});
    out.gamma = GammaTable(std::vector<double>(freqs.begin(), freqs.end()), dt, n);

    for (const auto& m : modes) {
        const double g2 = m.g * m.g;
        const double nb = bose(m.omega, temperature);
        for (std::size_t j = 0; j <= n; ++j) {
            const double t = dt * double(j);
            out.bcf.values[j] +=
                g2 * ((nb + 1.0) * std::polar(1.0, -m.omega * t) + nb * std::polar(1.0, m.omega * t));
        }
        for (std::size_t f = 0; f < out.gamma.freqs().size(); ++f) {
            const double w = out.gamma.freqs()[f];
            auto& g = out.gamma.gamma(f);
            auto& dg = out.gamma.dgamma(f);
            for (std::size_t j = 0; j <= n; ++j) {
                const double t = dt * double(j);
                g[j] += g2 * ((nb + 1.0) * phase_integral(w - m.omega, t) +
                              nb * phase_integral(w + m.omega, t));
                dg[j] += g2 * ((nb + 1.0) * phase_integral_dx(w - m.omega, t) +
                               nb * phase_integral_dx(w + m.omega, t));
            }
        }
    }
    return out;
}

BathTables bath_tables(const SpectralDensity& sd, double dt, std::size_t n,
                       std::span<const double> freqs, std::size_t fft_n) {
    sd.validate();
    if (sd.is_discrete()) return discrete_bath_functions(sd.modes, sd.temperature, dt, n, freqs);
    const double horizon = dt * double(n);
    const std::size_t N = fft_n ? fft_n : default_fft_size(dt, std::max(5000.0, horizon));
    BathTables out;
    out.bcf = bcf_fft(sd, N, dt, horizon);
    out.gamma = gamma_table(out.bcf, freqs, n);
    return out;
}

void write_bcf_csv(std::ostream& os, const BathCorrelationTable& bcf, std::size_t n) {
    os << "t,re_c,im_c\n" << std::setprecision(17);
    const std::size_t last = std::min(n, bcf.size() - 1);
    for (std::size_t j = 0; j <= last; ++j)
        os << bcf.time(j) << ',' << bcf.values[j].real() << ',' << bcf.values[j].imag() << '\n';
}

void write_gamma_csv(std::ostream& os, const GammaTable& gt) {
    os << "t,freq,re_gamma,im_gamma\n" << std::setprecision(17);
    for (std::size_t j = 0; j <= gt.n(); ++j)
        for (std::size_t f = 0; f < gt.freqs().size(); ++f) {
            const cplx g = gt.gamma(f)[j];
            os << gt.dt() * double(j) << ',' << gt.freqs()[f] << ',' << g.real() << ',' << g.imag()
               << '\n';
        }
}

} // namespace tcl4
