#pragma once

// Scenario and sweep configuration: JSON parsing with path-qualified
// validation errors, and the built-in catalog of dynamical regimes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "metasim/cohort_engine.hpp"
#include "metasim/errors.hpp"
#include "metasim/model.hpp"

namespace metasim {

using json = nlohmann::json;

struct OutputRequest {
    bool timeseries = true;
    bool histogram = true;
    bool metrics = true;
    bool plots = true;
    bool log_scale = false;
};

struct Scenario {
    std::string name = "base";
    ModelParams params;
    SolverSettings settings;
    std::optional<double> transient; ///< defaults to a quarter of the horizon
    std::size_t histogram_bins = 40;
    std::vector<Cohort> initial_cohorts;
    OutputRequest outputs;
    bool vm_follows_v0 = true; ///< Vm was not given explicitly

    [[nodiscard]] double transient_time() const { return transient.value_or(0.25 * settings.t_end); }
};

inline const std::vector<std::string>& parameter_names()
{
    static const std::vector<std::string> names{"b", "e", "k", "m", "alpha", "V0", "K0", "Vm"};
    return names;
}

/// Sets one named model parameter. Keeps Vm = V0 while Vm is implicit.
inline void set_parameter(Scenario& sc, const std::string& name, double value, const std::string& path = {})
{
    ModelParams& p = sc.params;
    if (name == "b") p.b = value;
    else if (name == "e") p.e = value;
    else if (name == "k") p.k = value;
    else if (name == "m") p.m = value;
    else if (name == "alpha") p.alpha = value;
    else if (name == "V0") p.V0 = value;
    else if (name == "K0") p.K0 = value;
    else if (name == "Vm") {
        p.Vm = value;
        sc.vm_follows_v0 = false;
    } else {
        throw ConfigError("unknown parameter '" + name + "'", path);
    }
    if (sc.vm_follows_v0) {
        p.Vm = p.V0;
    }
}

inline double get_parameter(const ModelParams& p, const std::string& name)
{
    if (name == "b") return p.b;
    if (name == "e") return p.e;
    if (name == "k") return p.k;
    if (name == "m") return p.m;
    if (name == "alpha") return p.alpha;
    if (name == "V0") return p.V0;
    if (name == "K0") return p.K0;
    if (name == "Vm") return p.Vm;
    throw ConfigError("unknown parameter '" + name + "'");
}

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path)
{
    if (!obj.is_object()) {
        throw ConfigError("expected an object", path.empty() ? "/" : path);
    }
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError("unknown key", path + "/" + key);
        }
    }
}

inline double number_at(const json& obj, const std::string& key, const std::string& path)
{
    const json& v = obj.at(key);
    if (!v.is_number()) {
        throw ConfigError("expected a number", path + "/" + key);
    }
    return v.get<double>();
}

inline bool bool_at(const json& obj, const std::string& key, const std::string& path)
{
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
        throw ConfigError("expected a boolean", path + "/" + key);
    }
    return v.get<bool>();
}

[[noreturn]] inline void rethrow_with_prefix(const ConfigError& err, const std::string& prefix)
{
    if (prefix.empty()) {
        throw err;
    }
    std::string inner = err.path();
    std::string what = err.what();
    if (!inner.empty() && what.rfind(inner + ": ", 0) == 0) {
        what = what.substr(inner.size() + 2);
    }
    throw ConfigError(what, prefix + inner);
}

inline DimensionalParams dimensional_from_json(const json& d, const std::string& path)
{
    reject_unknown_keys(d, {"a", "b", "d", "e", "k", "m", "alpha", "V0", "K0", "Vm", "p", "biophysics"}, path);
    DimensionalParams dp;
    for (const char* key : {"a", "b", "d", "k", "m", "alpha", "V0", "K0"}) {
        if (!d.contains(key)) {
            throw ConfigError("required", path + "/" + key);
        }
    }
    dp.a = number_at(d, "a", path);
    dp.b = number_at(d, "b", path);
    dp.d = number_at(d, "d", path);
    dp.k = number_at(d, "k", path);
    dp.m = number_at(d, "m", path);
    dp.alpha = number_at(d, "alpha", path);
    dp.V0 = number_at(d, "V0", path);
    dp.K0 = number_at(d, "K0", path);
    dp.Vm = d.contains("Vm") ? number_at(d, "Vm", path) : dp.V0;
    dp.e = d.contains("e") ? number_at(d, "e", path) : 0.0;
    if (d.contains("p")) {
        dp.p = number_at(d, "p", path);
    }
    if (d.contains("biophysics")) {
        const json& bio = d.at("biophysics");
        const std::string bpath = path + "/biophysics";
        reject_unknown_keys(bio, {"e_hat", "Vd", "p", "D"}, bpath);
        InhibitorBiophysics b;
        for (const char* key : {"e_hat", "Vd", "p", "D"}) {
            if (!bio.contains(key)) {
                throw ConfigError("required", bpath + "/" + key);
            }
        }
        b.e_hat = number_at(bio, "e_hat", bpath);
        b.Vd = number_at(bio, "Vd", bpath);
        b.p = number_at(bio, "p", bpath);
        b.D = number_at(bio, "D", bpath);
        dp.biophysics = b;
    }
    return dp;
}

} // namespace detail

/// Parses and validates a scenario object. `path` prefixes error locations
/// when the scenario is nested (e.g. "/base" inside a sweep file).
inline Scenario scenario_from_json(const json& j, const std::string& path = {})
{
    detail::reject_unknown_keys(j, {"name", "params", "dimensional", "settings", "transient", "histogram_bins",
                                    "initial_cohorts", "outputs"},
                                path);
    Scenario sc;
    if (j.contains("name")) {
        if (!j.at("name").is_string() || j.at("name").get<std::string>().empty()) {
            throw ConfigError("expected a non-empty string", path + "/name");
        }
        sc.name = j.at("name").get<std::string>();
        if (sc.name.find_first_of("/\\") != std::string::npos || sc.name == "." || sc.name == "..") {
            throw ConfigError("must be usable as a directory name", path + "/name");
        }
    }
    if (j.contains("params") && j.contains("dimensional")) {
        throw ConfigError("give either params or dimensional, not both", path + "/dimensional");
    }
    if (j.contains("params")) {
        const json& p = j.at("params");
        const std::string ppath = path + "/params";
        if (!p.is_object()) {
            throw ConfigError("expected an object", ppath);
        }
        // V0 before Vm so an explicit Vm is not overwritten
        for (const auto& name : parameter_names()) {
            if (p.contains(name)) {
                set_parameter(sc, name, detail::number_at(p, name, ppath), ppath + "/" + name);
            }
        }
        for (const auto& [key, _] : p.items()) {
            if (std::find(parameter_names().begin(), parameter_names().end(), key) == parameter_names().end()) {
                throw ConfigError("unknown parameter", ppath + "/" + key);
            }
        }
    }
    if (j.contains("dimensional")) {
        try {
            sc.params = nondimensionalize(detail::dimensional_from_json(j.at("dimensional"), path + "/dimensional"));
        } catch (const ConfigError& err) {
            if (err.path().rfind(path + "/dimensional", 0) == 0) {
                throw;
            }
            detail::rethrow_with_prefix(err, path);
        }
        sc.vm_follows_v0 = false;
    }
    if (j.contains("settings")) {
        const json& s = j.at("settings");
        const std::string spath = path + "/settings";
        detail::reject_unknown_keys(s, {"dt", "t_end", "sample_every", "weight_floor"}, spath);
        if (s.contains("dt")) sc.settings.dt = detail::number_at(s, "dt", spath);
        if (s.contains("t_end")) sc.settings.t_end = detail::number_at(s, "t_end", spath);
        if (s.contains("sample_every")) sc.settings.sample_every = detail::number_at(s, "sample_every", spath);
        if (s.contains("weight_floor")) sc.settings.weight_floor = detail::number_at(s, "weight_floor", spath);
    }
    if (j.contains("transient")) {
        sc.transient = detail::number_at(j, "transient", path);
        if (!(*sc.transient >= 0.0) || *sc.transient >= sc.settings.t_end) {
            throw ConfigError("must lie in [0, t_end)", path + "/transient");
        }
    }
    if (j.contains("histogram_bins")) {
        const json& v = j.at("histogram_bins");
        if (!v.is_number_integer() || v.get<long long>() < 1) {
            throw ConfigError("expected an integer >= 1", path + "/histogram_bins");
        }
        sc.histogram_bins = v.get<std::size_t>();
    }
    if (j.contains("outputs")) {
        const json& o = j.at("outputs");
        const std::string opath = path + "/outputs";
        detail::reject_unknown_keys(o, {"timeseries", "histogram", "metrics", "plots", "log_scale"}, opath);
        if (o.contains("timeseries")) sc.outputs.timeseries = detail::bool_at(o, "timeseries", opath);
        if (o.contains("histogram")) sc.outputs.histogram = detail::bool_at(o, "histogram", opath);
        if (o.contains("metrics")) sc.outputs.metrics = detail::bool_at(o, "metrics", opath);
        if (o.contains("plots")) sc.outputs.plots = detail::bool_at(o, "plots", opath);
        if (o.contains("log_scale")) sc.outputs.log_scale = detail::bool_at(o, "log_scale", opath);
    }

    try {
        validate(sc.params);
        validate(sc.settings);
    } catch (const ConfigError& err) {
        detail::rethrow_with_prefix(err, path);
    }

    if (j.contains("initial_cohorts")) {
        const json& arr = j.at("initial_cohorts");
        const std::string cpath = path + "/initial_cohorts";
        if (!arr.is_array()) {
            throw ConfigError("expected an array", cpath);
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string ipath = cpath + "/" + std::to_string(i);
            const json& c = arr[i];
            detail::reject_unknown_keys(c, {"birth_time", "weight", "V", "K"}, ipath);
            for (const char* key : {"weight", "V", "K"}) {
                if (!c.contains(key)) {
                    throw ConfigError("required", ipath + "/" + key);
                }
            }
            Cohort cohort;
            cohort.birth_time = c.contains("birth_time") ? detail::number_at(c, "birth_time", ipath) : 0.0;
            cohort.weight = detail::number_at(c, "weight", ipath);
            cohort.state = {detail::number_at(c, "V", ipath), detail::number_at(c, "K", ipath)};
            if (!(cohort.weight >= 0.0)) {
                throw ConfigError("must be >= 0", ipath + "/weight");
            }
            if (!(cohort.state.V >= sc.params.V0)) {
                throw ConfigError("must be >= V0", ipath + "/V");
            }
            if (!(cohort.state.K > 0.0)) {
                throw ConfigError("must be > 0", ipath + "/K");
            }
            sc.initial_cohorts.push_back(cohort);
        }
    }
    return sc;
}

/// Full, explicit serialization (every parameter written out).
inline json to_json(const Scenario& sc)
{
    json j;
    j["name"] = sc.name;
    const ModelParams& p = sc.params;
    j["params"] = {{"b", p.b}, {"e", p.e}, {"k", p.k}, {"m", p.m}, {"alpha", p.alpha},
                   {"V0", p.V0}, {"K0", p.K0}};
    if (!sc.vm_follows_v0) {
        j["params"]["Vm"] = p.Vm;
    }
    j["settings"] = {{"dt", sc.settings.dt},
                     {"t_end", sc.settings.t_end},
                     {"sample_every", sc.settings.sample_every},
                     {"weight_floor", sc.settings.weight_floor}};
    if (sc.transient) {
        j["transient"] = *sc.transient;
    }
    j["histogram_bins"] = sc.histogram_bins;
    if (!sc.initial_cohorts.empty()) {
        json arr = json::array();
        for (const auto& c : sc.initial_cohorts) {
            arr.push_back({{"birth_time", c.birth_time}, {"weight", c.weight}, {"V", c.state.V}, {"K", c.state.K}});
        }
        j["initial_cohorts"] = arr;
    }
    j["outputs"] = {{"timeseries", sc.outputs.timeseries},
                    {"histogram", sc.outputs.histogram},
                    {"metrics", sc.outputs.metrics},
                    {"plots", sc.outputs.plots},
                    {"log_scale", sc.outputs.log_scale}};
    return j;
}

/// Built-in regimes. Horizons and step sizes are this tool's defaults:
/// t_end = 200 for oscillatory regimes, 1000 for the long burst run, 60 for
/// the exponentially growing linear model; dt = 1e-2, samples every 0.1.
inline std::vector<Scenario> catalog()
{
    std::vector<Scenario> out;
    auto add = [&](std::string name, std::initializer_list<std::pair<const char*, double>> overrides,
                   double t_end = 200.0, bool log_scale = false) {
        Scenario sc;
        sc.name = std::move(name);
        for (auto [key, value] : overrides) {
            set_parameter(sc, key, value);
        }
        sc.settings.t_end = t_end;
        sc.outputs.log_scale = log_scale;
        out.push_back(std::move(sc));
    };
    add("base", {});
    add("linear", {{"e", 0.0}}, 60.0);
    add("b-x10", {{"b", 10.0}});
    add("m-x10", {{"m", 10.0}});
    add("e-x10", {{"e", 10.0}});
    add("b-x0.1", {{"b", 0.1}});
    add("m-x0.1", {{"m", 0.1}});
    add("e-x0.1", {{"e", 0.1}});
    add("bursts", {{"m", 10.0}, {"k", 0.1}});
    add("bursts-long", {{"m", 10.0}, {"k", 0.1}}, 1000.0, true);
    add("complex-periodic", {{"m", 0.1}, {"k", 0.1}, {"e", 0.02}});
    add("deep-seed", {{"V0", 1e-4}, {"K0", 1e-3}});
    return out;
}

inline std::optional<Scenario> catalog_entry(const std::string& name)
{
    for (auto& sc : catalog()) {
        if (sc.name == name) {
            return sc;
        }
    }
    return std::nullopt;
}

struct SweepSpec {
    std::string name = "sweep";
    Scenario base;
    std::string axis;
    std::vector<double> values;
    std::size_t parallelism = 1;
};

/// Sweep file: {"name", "base": scenario object or catalog name, "axis",
/// "values": [..] or {"log_range": {"from", "to", "count"}}, "parallelism"}.
inline SweepSpec sweep_from_json(const json& j)
{
    detail::reject_unknown_keys(j, {"name", "base", "axis", "values", "parallelism"}, "");
    SweepSpec sw;
    if (j.contains("name")) {
        if (!j.at("name").is_string() || j.at("name").get<std::string>().empty()) {
            throw ConfigError("expected a non-empty string", "/name");
        }
        sw.name = j.at("name").get<std::string>();
    }
    if (!j.contains("base")) {
        throw ConfigError("required", "/base");
    }
    const json& base = j.at("base");
    if (base.is_string()) {
        auto entry = catalog_entry(base.get<std::string>());
        if (!entry) {
            throw ConfigError("no catalog scenario named '" + base.get<std::string>() + "'", "/base");
        }
        sw.base = *entry;
    } else {
        sw.base = scenario_from_json(base, "/base");
    }

    if (!j.contains("axis") || !j.at("axis").is_string()) {
        throw ConfigError("expected a parameter name", "/axis");
    }
    sw.axis = j.at("axis").get<std::string>();
    if (std::find(parameter_names().begin(), parameter_names().end(), sw.axis) == parameter_names().end()) {
        throw ConfigError("unknown parameter '" + sw.axis + "'", "/axis");
    }

    if (!j.contains("values")) {
        throw ConfigError("required", "/values");
    }
    const json& values = j.at("values");
    if (values.is_array()) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!values[i].is_number()) {
                throw ConfigError("expected a number", "/values/" + std::to_string(i));
            }
            sw.values.push_back(values[i].get<double>());
        }
    } else if (values.is_object()) {
        detail::reject_unknown_keys(values, {"log_range"}, "/values");
        const json& r = values.at("log_range");
        detail::reject_unknown_keys(r, {"from", "to", "count"}, "/values/log_range");
        for (const char* key : {"from", "to", "count"}) {
            if (!r.contains(key)) {
                throw ConfigError("required", std::string("/values/log_range/") + key);
            }
        }
        const double from = detail::number_at(r, "from", "/values/log_range");
        const double to = detail::number_at(r, "to", "/values/log_range");
        if (!r.at("count").is_number_integer() || r.at("count").get<long long>() < 1) {
            throw ConfigError("expected an integer >= 1", "/values/log_range/count");
        }
        const auto count = r.at("count").get<std::size_t>();
        if (!(from > 0.0) || !(to > 0.0)) {
            throw ConfigError("log range bounds must be > 0", "/values/log_range");
        }
        for (std::size_t i = 0; i < count; ++i) {
            const double u = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
            sw.values.push_back(i == 0 ? from : i + 1 == count ? to : from * std::pow(to / from, u));
        }
    } else {
        throw ConfigError("expected an array or a log_range object", "/values");
    }
    if (sw.values.empty()) {
        throw ConfigError("must not be empty", "/values");
    }
    for (std::size_t i = 0; i < sw.values.size(); ++i) {
        Scenario probe = sw.base;
        set_parameter(probe, sw.axis, sw.values[i]);
        try {
            validate(probe.params);
        } catch (const ConfigError& err) {
            throw ConfigError(std::string("value violates parameter constraints (") + err.what() + ")",
                              "/values/" + std::to_string(i));
        }
    }

    if (j.contains("parallelism")) {
        const json& v = j.at("parallelism");
        if (!v.is_number_integer() || v.get<long long>() < 1) {
            throw ConfigError("expected an integer >= 1", "/parallelism");
        }
        sw.parallelism = v.get<std::size_t>();
    }
    return sw;
}

} // namespace metasim
