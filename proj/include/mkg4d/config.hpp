#ifndef MKG4D_CONFIG_HPP
#define MKG4D_CONFIG_HPP

#include <json.hpp>

#include <numbers>
#include <set>
#include <string>

#include "mkg4d/util.hpp"

namespace mkg4d {

using json = nlohmann::ordered_json;

/// Run configuration. The JSON document is the manifest's provenance record:
/// unknown keys are errors, never ignored.
struct RunConfig {
    struct Grid {
        int n = 8;
        double L = 2.0 * std::numbers::pi;
    } grid;

    struct Phys {
        double mass = 0.0;
    } phys;

    struct Picard {
        int max_m = 25;
        double tol = 1e-10;
    };

    struct Solver {
        std::string method = "rk4";
        double dt = 1e-3;
        double T = 0.5;
        Picard picard;
    } solver;

    struct Data {
        std::uint64_t seed = 1;
        double amplitude = 0.1;
        double spectral_slope = 2.5;
        int band_limit = 2;
    } data;

    struct Analysis {
        double s = 1.25;
    } analysis;

    struct Output {
        std::string directory = "out";
        int snapshot_every = 100;
    } output;

    void validate() const {
        if (grid.n < 4 || (grid.n & (grid.n - 1)) != 0)
            throw ContractViolation("config: grid.n must be a power of two >= 4");
        if (!(grid.L > 0.0)) throw ContractViolation("config: grid.L must be positive");
        if (!(phys.mass >= 0.0)) throw ContractViolation("config: phys.mass must be >= 0");
        if (solver.method != "rk4" && solver.method != "picard")
            throw ContractViolation("config: solver.method must be rk4 or picard");
        if (!(solver.dt > 0.0)) throw ContractViolation("config: solver.dt must be positive");
        if (!(solver.T >= 0.0)) throw ContractViolation("config: solver.T must be >= 0");
        if (solver.picard.max_m < 1 || !(solver.picard.tol > 0.0))
            throw ContractViolation("config: picard block invalid");
        if (!(data.amplitude >= 0.0))
            throw ContractViolation("config: data.amplitude must be >= 0");
        if (data.band_limit < 1 || data.band_limit > grid.n / 2 - 1)
            throw ContractViolation(
                "config: data.band_limit must lie inside the retained band [1, n/2-1]");
        if (!(analysis.s > 1.0 && analysis.s < 2.0))
            throw ContractViolation("config: analysis.s must lie in (1, 2)");
        if (output.snapshot_every < 1)
            throw ContractViolation("config: output.snapshot_every must be >= 1");
    }
};

namespace detail {

inline void require_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    if (!j.is_object()) throw ContractViolation("config: " + where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.contains(it.key()))
            throw ContractViolation("config: unknown key '" + where + it.key() + "'");
}

}  // namespace detail

inline RunConfig config_from_json(const json& j) {
    RunConfig c;
    detail::require_keys(j, {"grid", "phys", "solver", "data", "analysis", "output"}, "");
    if (j.contains("grid")) {
        detail::require_keys(j["grid"], {"n", "L"}, "grid.");
        c.grid.n = j["grid"].value("n", c.grid.n);
        c.grid.L = j["grid"].value("L", c.grid.L);
    }
    if (j.contains("phys")) {
        detail::require_keys(j["phys"], {"mass"}, "phys.");
        c.phys.mass = j["phys"].value("mass", c.phys.mass);
    }
    if (j.contains("solver")) {
        detail::require_keys(j["solver"], {"method", "dt", "T", "picard"}, "solver.");
        c.solver.method = j["solver"].value("method", c.solver.method);
        c.solver.dt = j["solver"].value("dt", c.solver.dt);
        c.solver.T = j["solver"].value("T", c.solver.T);
        if (j["solver"].contains("picard")) {
            detail::require_keys(j["solver"]["picard"], {"max_m", "tol"}, "solver.picard.");
            c.solver.picard.max_m = j["solver"]["picard"].value("max_m", c.solver.picard.max_m);
            c.solver.picard.tol = j["solver"]["picard"].value("tol", c.solver.picard.tol);
        }
    }
    if (j.contains("data")) {
        detail::require_keys(j["data"], {"seed", "amplitude", "spectral_slope", "band_limit"},
                             "data.");
        c.data.seed = j["data"].value("seed", c.data.seed);
        c.data.amplitude = j["data"].value("amplitude", c.data.amplitude);
        c.data.spectral_slope = j["data"].value("spectral_slope", c.data.spectral_slope);
        c.data.band_limit = j["data"].value("band_limit", c.data.band_limit);
    }
    if (j.contains("analysis")) {
        detail::require_keys(j["analysis"], {"s"}, "analysis.");
        c.analysis.s = j["analysis"].value("s", c.analysis.s);
    }
    if (j.contains("output")) {
        detail::require_keys(j["output"], {"directory", "snapshot_every"}, "output.");
        c.output.directory = j["output"].value("directory", c.output.directory);
        c.output.snapshot_every = j["output"].value("snapshot_every", c.output.snapshot_every);
    }
    c.validate();
    return c;
}

inline json config_to_json(const RunConfig& c) {
    json j;
    j["grid"] = {{"n", c.grid.n}, {"L", c.grid.L}};
    j["phys"] = {{"mass", c.phys.mass}};
    j["solver"] = {{"method", c.solver.method},
                   {"dt", c.solver.dt},
                   {"T", c.solver.T},
                   {"picard", {{"max_m", c.solver.picard.max_m}, {"tol", c.solver.picard.tol}}}};
    j["data"] = {{"seed", c.data.seed},
                 {"amplitude", c.data.amplitude},
                 {"spectral_slope", c.data.spectral_slope},
                 {"band_limit", c.data.band_limit}};
    j["analysis"] = {{"s", c.analysis.s}};
    j["output"] = {{"directory", c.output.directory},
                   {"snapshot_every", c.output.snapshot_every}};
    return j;
}

/// Apply a dotted-path override like "solver.dt=5e-4". Returns the
/// normalized "path=value" string for the manifest log.
inline std::string apply_override(json& j, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
        throw ContractViolation("override must look like section.key=value: " + kv);
    const std::string path = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    json* cur = &j;
    std::size_t begin = 0;
    while (true) {
        const auto dot = path.find('.', begin);
        const std::string key = path.substr(begin, dot - begin);
        if (key.empty()) throw ContractViolation("override has an empty key segment: " + kv);
        if (dot == std::string::npos) {
            json parsed = json::parse(value, nullptr, false);
            (*cur)[key] = parsed.is_discarded() ? json(value) : parsed;
            break;
        }
        cur = &(*cur)[key];
        begin = dot + 1;
    }
    return path + "=" + value;
}

}  // namespace mkg4d

#endif
