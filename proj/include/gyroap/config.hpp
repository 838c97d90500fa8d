#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gyroap/errors.hpp"
#include "gyroap/fields.hpp"
#include "gyroap/vec2.hpp"

namespace gyroap {

// Which trajectory the scheme is compared against in a sweep.
enum class Comparison { Convergence, AsympDiscrete, AsympContinuous };

// Which observables enter the error norm.
enum class VariableSet { XE, GC, W };

inline const char* comparison_token(Comparison c) {
    switch (c) {
        case Comparison::Convergence:     return "convergence";
        case Comparison::AsympDiscrete:   return "asymptotic-discrete";
        case Comparison::AsympContinuous: return "asymptotic-continuous";
    }
    return "unknown";
}

// CLI spelling of the sweep mode; the config file uses comparison_token.
inline const char* mode_token(Comparison c) {
    switch (c) {
        case Comparison::Convergence:     return "convergence";
        case Comparison::AsympDiscrete:   return "asymp-discrete";
        case Comparison::AsympContinuous: return "asymp-continuous";
    }
    return "unknown";
}

// Sweep-table column value naming the comparand trajectory.
inline const char* comparand_token(Comparison c) {
    switch (c) {
        case Comparison::Convergence:     return "reference-stiff";
        case Comparison::AsympDiscrete:   return "limit-scheme";
        case Comparison::AsympContinuous: return "limit-reference";
    }
    return "unknown";
}

inline const char* variable_token(VariableSet v) {
    switch (v) {
        case VariableSet::XE: return "(x,e)";
        case VariableSet::GC: return "(x_gc,e_gc)";
        case VariableSet::W:  return "w";
    }
    return "unknown";
}

// Field selection as named in config files; make() builds a fresh instance so
// concurrent sweep cells never share one (the ceiling cache is not locked).
struct FieldSpec {
    enum class Kind { Disc, Uniform };
    Kind kind = Kind::Disc;
    double b0 = 1.0;
    UniformField::Potential phi = UniformField::Potential::Zero;

    std::unique_ptr<FieldModel> make() const {
        if (kind == Kind::Disc) return std::make_unique<DiscField>();
        return std::make_unique<UniformField>(b0, phi);
    }

    nlohmann::json to_json() const {
        if (kind == Kind::Disc) return "disc";
        nlohmann::json j;
        j["type"] = "uniform";
        j["b0"] = b0;
        j["phi"] = (phi == UniformField::Potential::Zero) ? "zero" : "quadratic";
        return j;
    }
};

struct SweepConfig {
    std::vector<double> eps_grid;
    std::vector<double> dt_grid;
    double T = 1.0;
    Vec2 x0{2.0, 2.0};
    Vec2 v0{3.0, 3.0};
    FieldSpec field;
    std::vector<Comparison> comparisons{Comparison::Convergence,
                                        Comparison::AsympDiscrete,
                                        Comparison::AsympContinuous};
    std::vector<VariableSet> variables{VariableSet::XE, VariableSet::GC,
                                       VariableSet::W};
    int parallel_workers = 1;
};

inline std::vector<double> default_eps_grid() {
    std::vector<double> g;
    for (int k = 0; k <= 10; ++k) g.push_back(std::ldexp(1.0, -k));
    return g;
}

// Default steps are dyadic fractions of the horizon so T/dt is an exact
// integer for any T.
inline std::vector<double> default_dt_grid(double T) {
    std::vector<double> g;
    for (int k = 4; k <= 14; ++k) g.push_back(T / std::ldexp(1.0, k));
    return g;
}

inline SweepConfig default_config() {
    SweepConfig c;
    c.eps_grid = default_eps_grid();
    c.dt_grid = default_dt_grid(c.T);
    return c;
}

inline void validate_config(const SweepConfig& c) {
    if (!(c.T > 0.0) || !std::isfinite(c.T))
        throw ConfigError("T must be a positive finite real");
    if (!std::isfinite(c.x0.x) || !std::isfinite(c.x0.y))
        throw ConfigError("x0 must be finite");
    if (!std::isfinite(c.v0.x) || !std::isfinite(c.v0.y))
        throw ConfigError("v0 must be finite");
    if (c.eps_grid.empty()) throw ConfigError("eps_grid must be nonempty");
    if (c.dt_grid.empty()) throw ConfigError("dt_grid must be nonempty");
    for (double e : c.eps_grid)
        if (!(e > 0.0) || !std::isfinite(e))
            throw ConfigError("eps_grid entries must be positive finite reals");
    for (double dt : c.dt_grid) {
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw ConfigError("dt_grid entries must be positive finite reals");
        const double ratio = c.T / dt;
        const double m = std::round(ratio);
        if (m < 1.0 || std::abs(ratio - m) > 1e-12 * m) {
            std::ostringstream os;
            os << "dt = " << dt << " does not divide T = " << c.T
               << " to within 1 part in 1e12";
            throw ConfigError(os.str());
        }
    }
    if (c.parallel_workers < 1 || c.parallel_workers > 1024)
        throw ConfigError("parallel_workers must be between 1 and 1024");
    if (c.field.kind == FieldSpec::Kind::Uniform &&
        (!(c.field.b0 > 0.0) || !std::isfinite(c.field.b0)))
        throw ConfigError("uniform field strength b0 must be a positive finite real");
}

namespace detail {

inline double json_real(const nlohmann::json& j, const char* key) {
    if (!j.is_number())
        throw ConfigError(std::string(key) + " must be a number");
    return j.get<double>();
}

inline Vec2 json_vec2(const nlohmann::json& j, const char* key) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(std::string(key) + " must be an array of two numbers");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline std::vector<double> json_real_array(const nlohmann::json& j, const char* key) {
    if (!j.is_array())
        throw ConfigError(std::string(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number())
            throw ConfigError(std::string(key) + " must contain only numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline FieldSpec json_field(const nlohmann::json& j) {
    FieldSpec f;
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "disc" || s == "paper") return f;
        if (s == "uniform") {
            f.kind = FieldSpec::Kind::Uniform;
            return f;
        }
        throw ConfigError("unknown field \"" + s +
                          "\" (expected \"disc\" or \"uniform\")");
    }
    if (!j.is_object())
        throw ConfigError("field must be a name or an object with a \"type\" key");
    bool have_type = false;
    for (const auto& [key, val] : j.items()) {
        if (key == "type") {
            have_type = true;
            if (!val.is_string()) throw ConfigError("field type must be a string");
            const std::string s = val.get<std::string>();
            if (s == "disc" || s == "paper") f.kind = FieldSpec::Kind::Disc;
            else if (s == "uniform") f.kind = FieldSpec::Kind::Uniform;
            else throw ConfigError("unknown field type \"" + s + "\"");
        } else if (key == "b0") {
            f.b0 = json_real(val, "field.b0");
        } else if (key == "phi") {
            if (!val.is_string())
                throw ConfigError("field.phi must be \"zero\" or \"quadratic\"");
            const std::string s = val.get<std::string>();
            if (s == "zero") f.phi = UniformField::Potential::Zero;
            else if (s == "quadratic") f.phi = UniformField::Potential::Quadratic;
            else throw ConfigError("field.phi must be \"zero\" or \"quadratic\"");
        } else {
            throw ConfigError("unknown field key \"" + key + "\"");
        }
    }
    if (!have_type) throw ConfigError("field object requires a \"type\" key");
    if (f.kind == FieldSpec::Kind::Disc && j.contains("b0"))
        throw ConfigError("field.b0 only applies to the uniform field");
    if (f.kind == FieldSpec::Kind::Disc && j.contains("phi"))
        throw ConfigError("field.phi only applies to the uniform field");
    return f;
}

inline std::vector<Comparison> json_comparisons(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("comparisons must be an array of names");
    bool want[3] = {false, false, false};
    for (const auto& v : j) {
        if (!v.is_string())
            throw ConfigError("comparisons must contain only names");
        const std::string s = v.get<std::string>();
        if (s == "convergence") want[0] = true;
        else if (s == "asymptotic-discrete") want[1] = true;
        else if (s == "asymptotic-continuous") want[2] = true;
        else
            throw ConfigError("unknown comparison \"" + s +
                              "\" (expected convergence, asymptotic-discrete, "
                              "or asymptotic-continuous)");
    }
    std::vector<Comparison> out;
    if (want[0]) out.push_back(Comparison::Convergence);
    if (want[1]) out.push_back(Comparison::AsympDiscrete);
    if (want[2]) out.push_back(Comparison::AsympContinuous);
    return out;
}

inline std::vector<VariableSet> json_variables(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("variables must be an array of names");
    bool want[3] = {false, false, false};
    for (const auto& v : j) {
        if (!v.is_string()) throw ConfigError("variables must contain only names");
        const std::string s = v.get<std::string>();
        if (s == "(x,e)") want[0] = true;
        else if (s == "(x_gc,e_gc)") want[1] = true;
        else if (s == "w") want[2] = true;
        else
            throw ConfigError("unknown variable set \"" + s +
                              "\" (expected \"(x,e)\", \"(x_gc,e_gc)\", or \"w\")");
    }
    std::vector<VariableSet> out;
    if (want[0]) out.push_back(VariableSet::XE);
    if (want[1]) out.push_back(VariableSet::GC);
    if (want[2]) out.push_back(VariableSet::W);
    return out;
}

} // namespace detail

inline SweepConfig parse_config_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    static const char* known[] = {"eps_grid", "dt_grid", "T", "x0", "v0",
                                  "field", "comparisons", "variables",
                                  "parallel_workers"};
    for (const auto& [key, val] : j.items()) {
        (void)val;
        bool ok = false;
        for (const char* k : known) ok = ok || (key == k);
        if (!ok) throw ConfigError("unknown config key \"" + key + "\"");
    }

    SweepConfig c;
    if (j.contains("T")) c.T = detail::json_real(j["T"], "T");
    c.eps_grid = j.contains("eps_grid")
                     ? detail::json_real_array(j["eps_grid"], "eps_grid")
                     : default_eps_grid();
    c.dt_grid = j.contains("dt_grid")
                    ? detail::json_real_array(j["dt_grid"], "dt_grid")
                    : default_dt_grid(c.T);
    if (j.contains("x0")) c.x0 = detail::json_vec2(j["x0"], "x0");
    if (j.contains("v0")) c.v0 = detail::json_vec2(j["v0"], "v0");
    if (j.contains("field")) c.field = detail::json_field(j["field"]);
    if (j.contains("comparisons")) c.comparisons = detail::json_comparisons(j["comparisons"]);
    if (j.contains("variables")) c.variables = detail::json_variables(j["variables"]);
    if (j.contains("parallel_workers")) {
        const auto& w = j["parallel_workers"];
        if (!w.is_number_integer())
            throw ConfigError("parallel_workers must be an integer");
        c.parallel_workers = w.get<int>();
    }
    validate_config(c);
    return c;
}

inline SweepConfig parse_config_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config is not valid JSON");
    return parse_config_json(j);
}

inline SweepConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str());
}

inline nlohmann::json config_to_json(const SweepConfig& c) {
    nlohmann::json j;
    j["eps_grid"] = c.eps_grid;
    j["dt_grid"] = c.dt_grid;
    j["T"] = c.T;
    j["x0"] = {c.x0.x, c.x0.y};
    j["v0"] = {c.v0.x, c.v0.y};
    j["field"] = c.field.to_json();
    std::vector<std::string> comps, vars;
    for (Comparison cm : c.comparisons) comps.push_back(comparison_token(cm));
    for (VariableSet v : c.variables) vars.push_back(variable_token(v));
    j["comparisons"] = comps;
    j["variables"] = vars;
    j["parallel_workers"] = c.parallel_workers;
    return j;
}

} // namespace gyroap
