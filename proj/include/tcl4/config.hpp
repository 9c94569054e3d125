// config.hpp: run configuration as flat sectioned key/value text
//
// Grammar (one statement per line, '#' starts a comment):
//
//   [section]
//   key = value
//
// A value is a number expression (`3*pi/8`, `-1e-3`, `(1+2)/4`), a bare or
// double-quoted string, `true`/`false`, or a bracketed list of values, which
// may nest (`modes = [[0.6, 0.05], [1.0, 0.07]]`). Unknown sections or keys
// are errors. Every field not set in the text keeps its default and is
// recorded as such in `provenance`.

#pragma once

#include "tcl4/bath.hpp"
#include "tcl4/oracle.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tcl4 {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    struct Model {
        double theta{0.7853981633974483};
        bool operator==(const Model&) const = default;
    } model;

    struct Bath {
        std::optional<Cutoff> cutoff;
        double omega_c{10.0};
        double coupling{1.0};
        double temperature{1.0};
        std::vector<BathMode> modes;
        bool operator==(const Bath& o) const;
    } bath;

    struct Grid {
        double dt{0.01};
        double t_end{15.0};
        bool operator==(const Grid&) const = default;
    } grid;

    struct Solver {
        int order{4};
        std::size_t fft_n{0};     // 0 → default_fft_size
        std::size_t stride{1};
        bool operator==(const Solver&) const = default;
    } solver;

    struct Sweep {
        std::vector<double> theta_list;
        std::vector<double> temperature_list;
        std::vector<double> t_star{10.0, 15.0};
        bool operator==(const Sweep&) const = default;
    };
    std::optional<Sweep> sweep;

    struct Reference {
        std::string path;   // single trajectory (simulate, 1×1 sweep)
        std::string dir;    // sweep: <dir>/cell_<i>_<j>.csv
        bool operator==(const Reference&) const = default;
    };
    std::optional<Reference> reference;

    struct Output {
        std::string dir{"out"};
        std::vector<std::string> formats{"csv", "json"};
        bool operator==(const Output&) const = default;
    } output;

    struct Oracle {
        std::vector<double> thetas{0.0, 0.7853981633974483};
        std::vector<double> temperatures{0.0};
        int fock_cut{4};
        std::size_t dim_cap{16384};
        double t_max{10.0};
        std::vector<double> scales{1.0, 0.75, 0.5, 0.25};
        bool cubic_nuisance{true};
        std::vector<double> exponent_scales{1.0, 0.5, 0.25};
        double l2_tolerance{0.01};
        double l4_tolerance{0.05};
        bool operator==(const Oracle&) const = default;
    } oracle;

    struct Bench {
        std::vector<std::size_t> n_list{750, 1500};
        int repeats{3};
        bool operator==(const Bench&) const = default;
    } bench;

    struct Bcf {
        std::vector<double> temperatures{0.1, 1.0, 5.0};
        std::vector<double> t_n{5.0, 10.0, 50.0, 500.0, 5000.0};
        double t_ref{50000.0};
        double window{15.0};
        bool operator==(const Bcf&) const = default;
    } bcf;

    // "section.key" → "default" or "line N"
    std::map<std::string, std::string> provenance;

    bool operator==(const RunConfig& o) const;   // ignores provenance

    SpectralDensity spectral_density() const;    // at bath.temperature
    std::size_t steps() const;                   // round(t_end / dt)
    DiscreteBathSpec oracle_bath(double temperature) const;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

// Canonical text with every field at 17 significant digits.
std::string serialize(const RunConfig& cfg);

// Evaluates a number expression: + − * / parentheses, unary sign, `pi`.
double eval_expression(std::string_view expr);

// 64-bit FNV-1a of the canonical serialization, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

std::string code_version();

// {config_hash, code_version, command, complete}
nlohmann::json manifest(const RunConfig& cfg, std::string_view command, bool complete = true);

} // namespace tcl4
