#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gfm/controllers.hpp"
#include "gfm/hinf_synthesis.hpp"
#include "gfm/plant.hpp"
#include "gfm/time_sim.hpp"

namespace gfm {

// Plant keys are the table symbols (omega_b, Lf, Cf, Lg, Rg, Rf, Cdc, Dp, Dq,
// Sn, Vn, Vdc_base, include_rf). A bare number is per-unit; an object
// {"value": v, "unit": u} selects SI: H, F, ohm for the filter elements
// (AC base Zb = Vn^2/Sn), F for Cdc (DC base), Hz or rad/s for omega_b.
// The bases Sn, Vn and Vdc_base are plain numbers in VA and V.
// The string "table1" selects the built-in defaults.
PlantParams plant_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PlantParams& p);

// Either a preset name, {"preset": name, ...overrides}, or {"kind": ..., "k_pdc": ...}.
GainSet gains_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GainSet& g);

nlohmann::json to_json(const StepMetrics& m);
nlohmann::json to_json(const TuneResult& r);

struct BodePair {
    std::string input = "inj.e1";
    std::string output = "omega_u";
};

struct BodeOptions {
    std::vector<BodePair> pairs{BodePair{}};
    double omega_min = 1e-1;
    double omega_max = 1e6;
    int points = 400;
};

struct MetricsOptions {
    Channel channel = Channel::p;
    double step_time = kDefaultStepTime;
    double cutoff_hz = 100.0;
};

struct RunConfig {
    PlantParams plant = PlantParams::table1();
    GainSet gains = GainSet::table2_proposed();
    Scenario scenario = pref_step_scenario();
    MetricsOptions metrics;
    std::size_t decimate = 10; // trajectory CSV keeps every n-th sample
    BodeOptions bode;
    TuneOptions tune;
    std::vector<std::string> frozen;
    GainSet compare_baseline = GainSet::table2_original();
    GainSet compare_candidate = GainSet::table2_proposed();

    // The document the config was read from, kept so tune can echo it back.
    nlohmann::json source = nlohmann::json::object();

    void validate() const; // throws ConfigError
};

// Throws ConfigError on malformed input, unknown keys or invalid values.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// The source config with its gains replaced by the tuned set plus a
// "tune_result" block; loadable again by run_config_from_json.
nlohmann::json tune_result_document(const RunConfig& cfg, const TuneResult& result);

} // namespace gfm
