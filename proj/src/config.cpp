// config.cpp: parsing, validation and canonical serialization of RunConfig

#include "tcl4/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

namespace tcl4 {

namespace {

struct Value {
    bool is_list{false};
    std::string text;
    std::vector<Value> items;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

Value parse_value(std::string_view s) {
    s = trim(s);
    Value v;
    if (s.empty() || s.front() != '[') {
        if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
        v.text = std::string(s);
        return v;
    }
    if (s.back() != ']') throw ConfigError("unterminated list '" + std::string(s) + "'");
    v.is_list = true;
    const std::string_view body = trim(s.substr(1, s.size() - 2));
    if (body.empty()) return v;
    int depth = 0;
    bool quoted = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        const char c = i < body.size() ? body[i] : ',';
        if (c == '"') quoted = !quoted;
        if (quoted) continue;
        if (c == '[') ++depth;
        if (c == ']') --depth;
        if (depth < 0) throw ConfigError("unbalanced brackets in '" + std::string(s) + "'");
        if (c == ',' && depth == 0) {
            v.items.push_back(parse_value(body.substr(start, i - start)));
            start = i + 1;
        }
    }
    if (depth != 0) throw ConfigError("unbalanced brackets in '" + std::string(s) + "'");
    return v;
}

class ExprParser {
public:
    explicit ExprParser(std::string_view s) : s_(s) {}

    double run() {
        const double v = sum();
        skip();
        if (pos_ != s_.size()) fail();
        return v;
    }

private:
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail() const { throw ConfigError("expected a number, got '" + std::string(s_) + "'"); }

    double sum() {
        double v = product();
        for (;;) {
            if (eat('+')) v += product();
            else if (eat('-')) v -= product();
            else return v;
        }
    }
    double product() {
        double v = unary();
        for (;;) {
            if (eat('*')) v *= unary();
            else if (eat('/')) v /= unary();
            else return v;
        }
    }
    double unary() {
        if (eat('-')) return -unary();
        if (eat('+')) return unary();
        return atom();
    }
    double atom() {
        skip();
        if (eat('(')) {
            const double v = sum();
            if (!eat(')')) fail();
            return v;
        }
        if (s_.substr(pos_, 2) == "pi") {
            pos_ += 2;
            return std::numbers::pi;
        }
        const std::string rest(s_.substr(pos_));
        char* end = nullptr;
        const double v = std::strtod(rest.c_str(), &end);
        if (end == rest.c_str()) fail();
        pos_ += std::size_t(end - rest.c_str());
        return v;
    }

    std::string_view s_;
    std::size_t pos_{0};
};

double as_number(const Value& v) {
    if (v.is_list) throw ConfigError("expected a number, got a list");
    return eval_expression(v.text);
}

std::size_t as_count(const Value& v) {
    const double x = as_number(v);
    if (!(x >= 0.0) || x != std::floor(x) || x > 1e15)
        throw ConfigError("expected a non-negative integer, got '" + v.text + "'");
    return std::size_t(x);
}

const std::vector<Value>& as_list(const Value& v) {
    if (!v.is_list) throw ConfigError("expected a list, got '" + v.text + "'");
    return v.items;
}

std::vector<double> as_numbers(const Value& v) {
    std::vector<double> out;
    for (const auto& x : as_list(v)) out.push_back(as_number(x));
    return out;
}

bool as_bool(const Value& v) {
    if (!v.is_list && v.text == "true") return true;
    if (!v.is_list && v.text == "false") return false;
    throw ConfigError("expected true or false, got '" + v.text + "'");
}

std::string as_string(const Value& v) {
    if (v.is_list) throw ConfigError("expected a string, got a list");
    return v.text;
}

using Setter = std::function<void(RunConfig&, const Value&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"model.theta", [](RunConfig& c, const Value& v) { c.model.theta = as_number(v); }},

        {"bath.cutoff", [](RunConfig& c, const Value& v) {
             try {
                 c.bath.cutoff = cutoff_from_string(as_string(v));
             } catch (const std::invalid_argument& e) {
                 throw ConfigError(e.what());
             }
         }},
        {"bath.omega_c", [](RunConfig& c, const Value& v) { c.bath.omega_c = as_number(v); }},
        {"bath.coupling", [](RunConfig& c, const Value& v) { c.bath.coupling = as_number(v); }},
        {"bath.temperature", [](RunConfig& c, const Value& v) { c.bath.temperature = as_number(v); }},
        {"bath.modes", [](RunConfig& c, const Value& v) {
             c.bath.modes.clear();
             for (const auto& m : as_list(v)) {
                 const auto pair = as_numbers(m);
                 if (pair.size() != 2) throw ConfigError("each mode must be [omega, g]");
                 c.bath.modes.push_back({pair[0], pair[1]});
             }
         }},

        {"grid.dt", [](RunConfig& c, const Value& v) { c.grid.dt = as_number(v); }},
        {"grid.t_end", [](RunConfig& c, const Value& v) { c.grid.t_end = as_number(v); }},

        {"solver.order", [](RunConfig& c, const Value& v) { c.solver.order = int(as_count(v)); }},
        {"solver.fft_n", [](RunConfig& c, const Value& v) { c.solver.fft_n = as_count(v); }},
        {"solver.stride", [](RunConfig& c, const Value& v) { c.solver.stride = as_count(v); }},

        {"sweep.theta_list", [](RunConfig& c, const Value& v) { c.sweep->theta_list = as_numbers(v); }},
        {"sweep.temperature_list",
         [](RunConfig& c, const Value& v) { c.sweep->temperature_list = as_numbers(v); }},
        {"sweep.t_star", [](RunConfig& c, const Value& v) { c.sweep->t_star = as_numbers(v); }},

        {"reference.path", [](RunConfig& c, const Value& v) { c.reference->path = as_string(v); }},
        {"reference.dir", [](RunConfig& c, const Value& v) { c.reference->dir = as_string(v); }},

        {"output.dir", [](RunConfig& c, const Value& v) { c.output.dir = as_string(v); }},
        {"output.formats", [](RunConfig& c, const Value& v) {
             c.output.formats.clear();
             if (!v.is_list) c.output.formats.push_back(v.text);
             else
                 for (const auto& x : v.items) c.output.formats.push_back(as_string(x));
         }},

        {"oracle.thetas", [](RunConfig& c, const Value& v) { c.oracle.thetas = as_numbers(v); }},
        {"oracle.temperatures", [](RunConfig& c, const Value& v) { c.oracle.temperatures = as_numbers(v); }},
        {"oracle.fock_cut", [](RunConfig& c, const Value& v) { c.oracle.fock_cut = int(as_count(v)); }},
        {"oracle.dim_cap", [](RunConfig& c, const Value& v) { c.oracle.dim_cap = as_count(v); }},
        {"oracle.t_max", [](RunConfig& c, const Value& v) { c.oracle.t_max = as_number(v); }},
        {"oracle.scales", [](RunConfig& c, const Value& v) { c.oracle.scales = as_numbers(v); }},
        {"oracle.cubic_nuisance", [](RunConfig& c, const Value& v) { c.oracle.cubic_nuisance = as_bool(v); }},
        {"oracle.exponent_scales",
         [](RunConfig& c, const Value& v) { c.oracle.exponent_scales = as_numbers(v); }},
        {"oracle.l2_tolerance", [](RunConfig& c, const Value& v) { c.oracle.l2_tolerance = as_number(v); }},
        {"oracle.l4_tolerance", [](RunConfig& c, const Value& v) { c.oracle.l4_tolerance = as_number(v); }},

        {"bench.n_list", [](RunConfig& c, const Value& v) {
             c.bench.n_list.clear();
             for (const auto& x : as_list(v)) c.bench.n_list.push_back(as_count(x));
         }},
        {"bench.repeats", [](RunConfig& c, const Value& v) { c.bench.repeats = int(as_count(v)); }},

        {"bcf.temperatures", [](RunConfig& c, const Value& v) { c.bcf.temperatures = as_numbers(v); }},
        {"bcf.t_n", [](RunConfig& c, const Value& v) { c.bcf.t_n = as_numbers(v); }},
        {"bcf.t_ref", [](RunConfig& c, const Value& v) { c.bcf.t_ref = as_number(v); }},
        {"bcf.window", [](RunConfig& c, const Value& v) { c.bcf.window = as_number(v); }},
    };
    return table;
}

const std::set<std::string> known_sections = {"model", "bath", "grid", "solver", "sweep",
                                              "reference", "output", "oracle", "bench", "bcf"};

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key + ": " + what);
}

void validate(const RunConfig& c) {
    constexpr double half_pi = std::numbers::pi / 2;
    auto angle_ok = [](double t) { return t >= 0.0 && t <= half_pi + 1e-12; };
    require(angle_ok(c.model.theta), "model.theta", "theta must lie in [0, pi/2]");

    require(c.bath.cutoff.has_value() || !c.bath.modes.empty(), "bath.cutoff", "cutoff required");
    require(c.bath.omega_c > 0.0, "bath.omega_c", "omega_c must be positive");
    require(c.bath.coupling >= 0.0, "bath.coupling", "coupling must be >= 0");
    require(c.bath.temperature >= 0.0, "bath.temperature", "temperature must be >= 0");
    for (const auto& m : c.bath.modes) require(m.omega > 0.0, "bath.modes", "mode frequencies must be positive");

    require(c.grid.dt > 0.0, "grid.dt", "dt must be positive");
    require(c.grid.t_end >= c.grid.dt, "grid.t_end", "t_end must be >= dt");

    require(c.solver.order == 0 || c.solver.order == 2 || c.solver.order == 4, "solver.order",
            "order must be 0, 2 or 4");
    require(c.solver.stride >= 1, "solver.stride", "stride must be >= 1");

    if (c.sweep) {
        require(!c.sweep->theta_list.empty(), "sweep.theta_list", "theta_list must not be empty");
        for (double t : c.sweep->theta_list) require(angle_ok(t), "sweep.theta_list", "theta must lie in [0, pi/2]");
        require(!c.sweep->temperature_list.empty(), "sweep.temperature_list",
                "temperature_list must not be empty");
        for (double T : c.sweep->temperature_list)
            require(T >= 0.0, "sweep.temperature_list", "temperature must be >= 0");
        for (double t : c.sweep->t_star)
            require(t >= 0.0 && t <= c.grid.t_end, "sweep.t_star", "t_star must lie in [0, t_end]");
    }

    for (const auto& f : c.output.formats)
        require(f == "csv" || f == "json", "output.formats", "formats must be csv or json");

    for (double t : c.oracle.thetas) require(angle_ok(t), "oracle.thetas", "theta must lie in [0, pi/2]");
    for (double T : c.oracle.temperatures) require(T >= 0.0, "oracle.temperatures", "temperature must be >= 0");
    require(c.oracle.fock_cut >= 2, "oracle.fock_cut", "fock_cut must be >= 2");
    require(c.oracle.t_max > 0.0, "oracle.t_max", "t_max must be positive");
    require(c.oracle.scales.size() >= (c.oracle.cubic_nuisance ? 3u : 2u), "oracle.scales",
            "need at least as many scales as fit parameters");
    for (double s : c.oracle.scales) require(s > 0.0, "oracle.scales", "scales must be positive");
    require(c.oracle.exponent_scales.size() >= 2, "oracle.exponent_scales", "need at least two scales");
    for (double s : c.oracle.exponent_scales) require(s > 0.0, "oracle.exponent_scales", "scales must be positive");

    require(!c.bench.n_list.empty(), "bench.n_list", "n_list must not be empty");
    for (auto n : c.bench.n_list) require(n >= 1, "bench.n_list", "step counts must be >= 1");
    require(c.bench.repeats >= 1, "bench.repeats", "repeats must be >= 1");

    for (double t : c.bcf.t_n) require(t > 0.0, "bcf.t_n", "t_n must be positive");
    require(c.bcf.t_ref > 0.0, "bcf.t_ref", "t_ref must be positive");
    require(c.bcf.window > 0.0, "bcf.window", "window must be positive");
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
    return s + "]";
}

std::string quoted(const std::string& s) { return '"' + s + '"'; }

} // namespace

bool RunConfig::Bath::operator==(const Bath& o) const {
    if (cutoff != o.cutoff || omega_c != o.omega_c || coupling != o.coupling ||
        temperature != o.temperature || modes.size() != o.modes.size())
        return false;
    for (std::size_t i = 0; i < modes.size(); ++i)
        if (modes[i].omega != o.modes[i].omega || modes[i].g != o.modes[i].g) return false;
    return true;
}

bool RunConfig::operator==(const RunConfig& o) const {
    return model == o.model && bath == o.bath && grid == o.grid && solver == o.solver &&
           sweep == o.sweep && reference == o.reference && output == o.output && oracle == o.oracle &&
           bench == o.bench && bcf == o.bcf;
}

SpectralDensity RunConfig::spectral_density() const {
    SpectralDensity sd;
    sd.coupling = bath.coupling;
    sd.cutoff = bath.cutoff.value_or(Cutoff::drude);
    sd.omega_c = bath.omega_c;
    sd.temperature = bath.temperature;
    sd.modes = bath.modes;
    return sd;
}

std::size_t RunConfig::steps() const { return std::size_t(std::llround(grid.t_end / grid.dt)); }

DiscreteBathSpec RunConfig::oracle_bath(double temperature) const {
    if (bath.modes.empty()) throw ConfigError("bath.modes: the oracle needs discrete modes");
    DiscreteBathSpec spec;
    spec.modes = bath.modes;
    spec.fock_cut = oracle.fock_cut;
    spec.temperature = temperature;
    spec.dim_cap = oracle.dim_cap;
    return spec;
}

double eval_expression(std::string_view expr) { return ExprParser(trim(expr)).run(); }

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    for (const auto& [key, _] : setters()) {
        const std::string section = key.substr(0, key.find('.'));
        if (section != "sweep" && section != "reference") cfg.provenance[key] = "default";
    }

    std::string section;
    std::set<std::string> seen;
    std::size_t lineno = 0;
    std::istringstream is{std::string(text)};
    std::string raw;
    while (std::getline(is, raw)) {
        ++lineno;
        const std::string where = "line " + std::to_string(lineno);
        std::string_view line = raw;
        if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!known_sections.count(section)) throw ConfigError(where + ": unknown section '" + section + "'");
            if (section == "sweep" && !cfg.sweep) {
                cfg.sweep.emplace();
                for (const char* k : {"sweep.theta_list", "sweep.temperature_list", "sweep.t_star"})
                    cfg.provenance[k] = "default";
            }
            if (section == "reference" && !cfg.reference) {
                cfg.reference.emplace();
                for (const char* k : {"reference.path", "reference.dir"}) cfg.provenance[k] = "default";
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
        if (section.empty()) throw ConfigError(where + ": key outside of a section");
        const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError(where + ": unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
        try {
            it->second(cfg, parse_value(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + key + ": " + e.what());
        }
        cfg.provenance[key] = where;
    }
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string serialize(const RunConfig& c) {
    std::ostringstream os;
    os << "[model]\ntheta = " << num(c.model.theta) << "\n\n";

    os << "[bath]\n";
    if (c.bath.cutoff) os << "cutoff = " << to_string(*c.bath.cutoff) << '\n';
    os << "omega_c = " << num(c.bath.omega_c) << '\n'
       << "coupling = " << num(c.bath.coupling) << '\n'
       << "temperature = " << num(c.bath.temperature) << '\n';
    if (!c.bath.modes.empty()) {
        os << "modes = [";
        for (std::size_t i = 0; i < c.bath.modes.size(); ++i)
            os << (i ? ", " : "") << '[' << num(c.bath.modes[i].omega) << ", " << num(c.bath.modes[i].g) << ']';
        os << "]\n";
    }

    os << "\n[grid]\ndt = " << num(c.grid.dt) << "\nt_end = " << num(c.grid.t_end) << "\n\n";
    os << "[solver]\norder = " << c.solver.order << "\nfft_n = " << c.solver.fft_n
       << "\nstride = " << c.solver.stride << "\n\n";

    if (c.sweep)
        os << "[sweep]\ntheta_list = " << list(c.sweep->theta_list)
           << "\ntemperature_list = " << list(c.sweep->temperature_list)
           << "\nt_star = " << list(c.sweep->t_star) << "\n\n";
    if (c.reference)
        os << "[reference]\npath = " << quoted(c.reference->path) << "\ndir = " << quoted(c.reference->dir)
           << "\n\n";

    os << "[output]\ndir = " << quoted(c.output.dir) << "\nformats = [";
    for (std::size_t i = 0; i < c.output.formats.size(); ++i) os << (i ? ", " : "") << c.output.formats[i];
    os << "]\n\n";

    const auto& o = c.oracle;
    os << "[oracle]\nthetas = " << list(o.thetas) << "\ntemperatures = " << list(o.temperatures)
       << "\nfock_cut = " << o.fock_cut << "\ndim_cap = " << o.dim_cap << "\nt_max = " << num(o.t_max)
       << "\nscales = " << list(o.scales) << "\ncubic_nuisance = " << (o.cubic_nuisance ? "true" : "false")
       << "\nexponent_scales = " << list(o.exponent_scales) << "\nl2_tolerance = " << num(o.l2_tolerance)
       << "\nl4_tolerance = " << num(o.l4_tolerance) << "\n\n";

    os << "[bench]\nn_list = [";
    for (std::size_t i = 0; i < c.bench.n_list.size(); ++i) os << (i ? ", " : "") << c.bench.n_list[i];
    os << "]\nrepeats = " << c.bench.repeats << "\n\n";

    os << "[bcf]\ntemperatures = " << list(c.bcf.temperatures) << "\nt_n = " << list(c.bcf.t_n)
       << "\nt_ref = " << num(c.bcf.t_ref) << "\nwindow = " << num(c.bcf.window) << '\n';
    return os.str();
}

std::string config_hash(const RunConfig& cfg) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : serialize(cfg)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string code_version() { return TCL4_VERSION; }

nlohmann::json manifest(const RunConfig& cfg, std::string_view command, bool complete) {
    return {{"config_hash", config_hash(cfg)},
            {"code_version", code_version()},
            {"command", std::string(command)},
            {"complete", complete}};
}

} // namespace tcl4
