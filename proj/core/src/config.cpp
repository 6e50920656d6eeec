#include "gfm/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "gfm/error.hpp"
#include "gfm/linear_analysis.hpp"

namespace gfm {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, std::string_view where)
{
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.contains(key))
            throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
}

const json& require_object(const json& j, std::string_view where)
{
    if (!j.is_object())
        throw ConfigError(fmt::format("{} must be an object", where));
    return j;
}

double number(const json& j, std::string_view where)
{
    if (!j.is_number())
        throw ConfigError(fmt::format("{} must be a number", where));
    const double v = j.get<double>();
    if (!std::isfinite(v))
        throw ConfigError(fmt::format("{} must be finite", where));
    return v;
}

void read_number(const json& j, const char* key, double& out, std::string_view where)
{
    if (j.contains(key))
        out = number(j.at(key), fmt::format("{}.{}", where, key));
}

void read_bool(const json& j, const char* key, bool& out, std::string_view where)
{
    if (!j.contains(key))
        return;
    if (!j.at(key).is_boolean())
        throw ConfigError(fmt::format("{}.{} must be a boolean", where, key));
    out = j.at(key).get<bool>();
}

template <typename Int>
void read_integer(const json& j, const char* key, Int& out, std::string_view where)
{
    if (!j.contains(key))
        return;
    const json& v = j.at(key);
    if (!v.is_number_integer() || (std::is_unsigned_v<Int> && v.get<long long>() < 0))
        throw ConfigError(fmt::format("{}.{} must be a non-negative integer", where, key));
    out = v.get<Int>();
}

std::string string_at(const json& j, std::string_view where)
{
    if (!j.is_string())
        throw ConfigError(fmt::format("{} must be a string", where));
    return j.get<std::string>();
}

enum class Dimension { inductance, capacitance, resistance, dc_capacitance, angular_frequency, power, voltage, plain };

// Converts a plant entry to the stored representation. Per-unit values pass through.
double plant_value(const json& entry, Dimension dim, const PlantParams& base, std::string_view key)
{
    const std::string where = fmt::format("plant.{}", key);
    if (entry.is_number())
        return number(entry, where);
    require_object(entry, where);
    reject_unknown(entry, {"value", "unit"}, where);
    if (!entry.contains("value") || !entry.contains("unit"))
        throw ConfigError(where + " needs both 'value' and 'unit'");
    const double v = number(entry.at("value"), where + ".value");
    const std::string unit = string_at(entry.at("unit"), where + ".unit");
    const bool is_base = dim == Dimension::power || dim == Dimension::voltage || dim == Dimension::angular_frequency;
    if (unit == "pu" && !is_base)
        return v;

    const double zb = base.Vn * base.Vn / base.Sn;
    switch (dim) {
    case Dimension::inductance:
        if (unit == "H")
            return v * base.omega_b / zb;
        break;
    case Dimension::capacitance:
        if (unit == "F")
            return v * base.omega_b * zb;
        break;
    case Dimension::resistance:
        if (unit == "ohm")
            return v / zb;
        break;
    case Dimension::dc_capacitance:
        if (unit == "F")
            return base.dc_capacitance_pu(v);
        break;
    case Dimension::angular_frequency:
        if (unit == "rad/s")
            return v;
        if (unit == "Hz")
            return 2.0 * std::numbers::pi * v;
        break;
    case Dimension::power:
        if (unit == "VA")
            return v;
        break;
    case Dimension::voltage:
        if (unit == "V")
            return v;
        break;
    case Dimension::plain:
        break;
    }
    throw ConfigError(fmt::format("unit '{}' not accepted for {}", unit, where));
}

json tagged(double v, const char* unit) { return json{{"value", v}, {"unit", unit}}; }

Setpoints setpoints_from_json(const json& j, Setpoints sp)
{
    require_object(j, "setpoints");
    reject_unknown(j, {"Pref", "Qref", "Vref", "Vdcref"}, "setpoints");
    read_number(j, "Pref", sp.Pref, "setpoints");
    read_number(j, "Qref", sp.Qref, "setpoints");
    read_number(j, "Vref", sp.Vref, "setpoints");
    read_number(j, "Vdcref", sp.Vdcref, "setpoints");
    return sp;
}

Disturbance grid_from_json(const json& j, Disturbance d)
{
    require_object(j, "grid");
    reject_unknown(j, {"omega_g", "Vg"}, "grid");
    read_number(j, "omega_g", d.omega_g, "grid");
    read_number(j, "Vg", d.Vg, "grid");
    return d;
}

void scenario_from_json(const json& j, RunConfig& cfg)
{
    require_object(j, "scenario");
    reject_unknown(j,
                   {"duration", "step", "prefilter_tau", "fixed_vdc", "events", "metrics_channel", "step_time",
                    "cutoff_hz", "decimate"},
                   "scenario");
    Scenario& sc = cfg.scenario;
    read_number(j, "duration", sc.duration, "scenario");
    read_number(j, "step", sc.step, "scenario");
    read_number(j, "prefilter_tau", sc.prefilter_tau, "scenario");
    read_bool(j, "fixed_vdc", sc.fixed_vdc, "scenario");
    if (j.contains("events")) {
        if (!j.at("events").is_array())
            throw ConfigError("scenario.events must be an array");
        sc.events.clear();
        for (const json& ev : j.at("events")) {
            require_object(ev, "scenario event");
            reject_unknown(ev, {"time", "quantity", "value"}, "scenario event");
            if (!ev.contains("time") || !ev.contains("quantity") || !ev.contains("value"))
                throw ConfigError("scenario event needs time, quantity and value");
            sc.events.push_back({number(ev.at("time"), "event.time"),
                                 quantity_from_string(string_at(ev.at("quantity"), "event.quantity")),
                                 number(ev.at("value"), "event.value")});
        }
    }
    if (j.contains("metrics_channel"))
        cfg.metrics.channel = channel_from_string(string_at(j.at("metrics_channel"), "scenario.metrics_channel"));
    read_number(j, "step_time", cfg.metrics.step_time, "scenario");
    read_number(j, "cutoff_hz", cfg.metrics.cutoff_hz, "scenario");
    read_integer(j, "decimate", cfg.decimate, "scenario");
}

void bode_from_json(const json& j, BodeOptions& b)
{
    require_object(j, "bode");
    reject_unknown(j, {"pairs", "omega_min", "omega_max", "points"}, "bode");
    if (j.contains("pairs")) {
        if (!j.at("pairs").is_array() || j.at("pairs").empty())
            throw ConfigError("bode.pairs must be a non-empty array");
        b.pairs.clear();
        for (const json& p : j.at("pairs")) {
            require_object(p, "bode pair");
            reject_unknown(p, {"input", "output"}, "bode pair");
            if (!p.contains("input") || !p.contains("output"))
                throw ConfigError("bode pair needs input and output");
            b.pairs.push_back({string_at(p.at("input"), "bode.input"), string_at(p.at("output"), "bode.output")});
        }
    }
    read_number(j, "omega_min", b.omega_min, "bode");
    read_number(j, "omega_max", b.omega_max, "bode");
    read_integer(j, "points", b.points, "bode");
}

void tune_from_json(const json& j, RunConfig& cfg)
{
    require_object(j, "tune");
    reject_unknown(j, {"seed", "max_evals", "restarts", "frozen"}, "tune");
    read_integer(j, "seed", cfg.tune.seed, "tune");
    read_integer(j, "max_evals", cfg.tune.max_evals, "tune");
    read_integer(j, "restarts", cfg.tune.restarts, "tune");
    if (j.contains("frozen")) {
        if (!j.at("frozen").is_array())
            throw ConfigError("tune.frozen must be an array of gain names");
        cfg.frozen.clear();
        for (const json& n : j.at("frozen"))
            cfg.frozen.push_back(string_at(n, "tune.frozen[]"));
    }
}

} // namespace

PlantParams plant_from_json(const json& j)
{
    PlantParams p = PlantParams::table1();
    if (j.is_string()) {
        if (j.get<std::string>() != "table1")
            throw ConfigError("unknown plant preset '" + j.get<std::string>() + "'");
        return p;
    }
    require_object(j, "plant");
    reject_unknown(j, {"omega_b", "Lf", "Cf", "Lg", "Rg", "Rf", "Cdc", "Dp", "Dq", "Sn", "Vn", "Vdc_base", "include_rf"},
                   "plant");

    // Bases first: SI conversions of the other entries depend on them.
    if (j.contains("omega_b"))
        p.omega_b = plant_value(j.at("omega_b"), Dimension::angular_frequency, p, "omega_b");
    if (j.contains("Sn"))
        p.Sn = plant_value(j.at("Sn"), Dimension::power, p, "Sn");
    if (j.contains("Vn"))
        p.Vn = plant_value(j.at("Vn"), Dimension::voltage, p, "Vn");
    if (j.contains("Vdc_base"))
        p.Vdc_base = plant_value(j.at("Vdc_base"), Dimension::voltage, p, "Vdc_base");
    if (!(p.Sn > 0.0) || !(p.Vn > 0.0) || !(p.Vdc_base > 0.0) || !(p.omega_b > 0.0))
        throw ConfigError("plant bases (omega_b, Sn, Vn, Vdc_base) must be positive");

    const PlantParams base = p;
    if (j.contains("Lf"))
        p.Lf = plant_value(j.at("Lf"), Dimension::inductance, base, "Lf");
    if (j.contains("Cf"))
        p.Cf = plant_value(j.at("Cf"), Dimension::capacitance, base, "Cf");
    if (j.contains("Lg"))
        p.Lg = plant_value(j.at("Lg"), Dimension::inductance, base, "Lg");
    if (j.contains("Rg"))
        p.Rg = plant_value(j.at("Rg"), Dimension::resistance, base, "Rg");
    if (j.contains("Rf"))
        p.Rf = plant_value(j.at("Rf"), Dimension::resistance, base, "Rf");
    if (j.contains("Cdc"))
        p.Cdc_pu = plant_value(j.at("Cdc"), Dimension::dc_capacitance, base, "Cdc");
    if (j.contains("Dp"))
        p.Dp = plant_value(j.at("Dp"), Dimension::plain, base, "Dp");
    if (j.contains("Dq"))
        p.Dq = plant_value(j.at("Dq"), Dimension::plain, base, "Dq");
    read_bool(j, "include_rf", p.include_rf, "plant");
    p.validate();
    return p;
}

json to_json(const PlantParams& p)
{
    return json{{"omega_b", tagged(p.omega_b, "rad/s")},
                {"Lf", tagged(p.Lf, "pu")},
                {"Cf", tagged(p.Cf, "pu")},
                {"Lg", tagged(p.Lg, "pu")},
                {"Rg", tagged(p.Rg, "pu")},
                {"Rf", tagged(p.Rf, "pu")},
                {"Cdc", tagged(p.Cdc_pu, "pu")},
                {"Dp", tagged(p.Dp, "pu")},
                {"Dq", tagged(p.Dq, "pu")},
                {"Sn", tagged(p.Sn, "VA")},
                {"Vn", tagged(p.Vn, "V")},
                {"Vdc_base", tagged(p.Vdc_base, "V")},
                {"include_rf", p.include_rf}};
}

GainSet gains_from_json(const json& j)
{
    if (j.is_string())
        return gain_preset(j.get<std::string>());
    require_object(j, "gains");
    reject_unknown(j,
                   {"preset", "kind", "k_pdc", "k_idc", "k12", "k14", "k15", "k21", "k22", "k24", "k31", "k32", "k34"},
                   "gains");
    GainSet g;
    if (j.contains("preset")) {
        g = gain_preset(string_at(j.at("preset"), "gains.preset"));
        if (j.contains("kind"))
            g.kind = controller_kind_from_string(string_at(j.at("kind"), "gains.kind"));
    } else {
        if (!j.contains("kind"))
            throw ConfigError("inline gains need a 'kind' (vsg, mimo_gfm or proposed)");
        g.kind = controller_kind_from_string(string_at(j.at("kind"), "gains.kind"));
    }
    for (const char* key : {"k_pdc", "k_idc", "k12", "k14", "k15", "k21", "k22", "k24", "k31", "k32", "k34"})
        if (j.contains(key))
            gain_ref(g, key) = number(j.at(key), fmt::format("gains.{}", key));
    g.validate();
    return g;
}

json to_json(const GainSet& g)
{
    json j{{"kind", std::string(to_string(g.kind))}};
    for (const char* key : {"k_pdc", "k_idc", "k12", "k14", "k15", "k21", "k22", "k24", "k31", "k32", "k34"})
        j[key] = gain_value(g, key);
    return j;
}

json to_json(const StepMetrics& m)
{
    return json{{"settling_time_s", m.settling_time},
                {"overshoot_pct", m.overshoot_pct},
                {"steady_value", m.steady_value},
                {"hf_residue", m.hf_residue},
                {"cutoff_hz", m.cutoff_hz}};
}

json to_json(const TuneResult& r)
{
    json history = json::array();
    for (const auto& h : r.history)
        history.push_back({{"evaluations", h.evaluations}, {"gamma", h.gamma}, {"abscissa", h.abscissa}});
    return json{{"gamma", r.gamma},
                {"abscissa", r.abscissa},
                {"seed", r.seed},
                {"evaluations", r.evaluations},
                {"found_stable", r.found_stable},
                {"history", std::move(history)}};
}

void RunConfig::validate() const
{
    plant.validate();
    gains.validate();
    compare_baseline.validate();
    compare_candidate.validate();
    scenario.validate();
    if (scenario.setpoints.Pref < 0.0)
        throw ConfigError("Pref must be >= 0");
    if (!(metrics.cutoff_hz > 0.0))
        throw ConfigError("cutoff_hz must be positive");
    if (decimate == 0)
        throw ConfigError("decimate must be >= 1");
    if (!(bode.omega_min > 0.0) || !(bode.omega_max > bode.omega_min) || bode.points < 2)
        throw ConfigError("bode grid needs 0 < omega_min < omega_max and points >= 2");
    if (tune.max_evals < 1 || tune.restarts < 1)
        throw ConfigError("tune budget needs max_evals >= 1 and restarts >= 1");
    const auto names = tunable_gains(gains.kind);
    for (const auto& f : frozen)
        if (std::find(names.begin(), names.end(), f) == names.end())
            throw ConfigError(fmt::format("frozen gain '{}' is not tunable for kind {}", f, to_string(gains.kind)));
}

RunConfig run_config_from_json(const json& j)
{
    require_object(j, "config");
    reject_unknown(j, {"plant", "gains", "setpoints", "grid", "scenario", "bode", "tune", "compare", "tune_result"},
                   "config");
    RunConfig cfg;
    cfg.source = j;
    try {
        if (j.contains("plant"))
            cfg.plant = plant_from_json(j.at("plant"));
        if (j.contains("gains"))
            cfg.gains = gains_from_json(j.at("gains"));
        if (j.contains("setpoints"))
            cfg.scenario.setpoints = setpoints_from_json(j.at("setpoints"), cfg.scenario.setpoints);
        if (j.contains("grid"))
            cfg.scenario.grid = grid_from_json(j.at("grid"), cfg.scenario.grid);
        if (j.contains("scenario"))
            scenario_from_json(j.at("scenario"), cfg);
        if (j.contains("bode"))
            bode_from_json(j.at("bode"), cfg.bode);
        if (j.contains("tune"))
            tune_from_json(j.at("tune"), cfg);
        if (j.contains("compare")) {
            const json& c = require_object(j.at("compare"), "compare");
            reject_unknown(c, {"baseline", "candidate"}, "compare");
            if (c.contains("baseline"))
                cfg.compare_baseline = gains_from_json(c.at("baseline"));
            if (c.contains("candidate"))
                cfg.compare_candidate = gains_from_json(c.at("candidate"));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
    }
    return run_config_from_json(j);
}

json tune_result_document(const RunConfig& cfg, const TuneResult& result)
{
    json doc = cfg.source.is_object() ? cfg.source : json::object();
    doc["gains"] = to_json(result.best);
    doc["tune_result"] = to_json(result);
    return doc;
}

} // namespace gfm
