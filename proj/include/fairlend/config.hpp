#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "fairlend/datagen.hpp"
#include "fairlend/experiments.hpp"
#include "fairlend/longterm.hpp"
#include "fairlend/metrics.hpp"
#include "fairlend/model.hpp"

namespace fairlend {

// Everything a run needs, loaded from one JSON file. Per-task seeds (data
// generation, splitting, simulation) are never configured directly; they all
// derive from base_seed plus a task key.
struct RunConfig {
    GenConfig gen;
    double split_fraction = 0.7;
    TrainHyperparams hp;
    EconomicParams econ_default;
    ScenarioGrid grid;
    SimulationConfig sim;
    LabelSource eval_labels = LabelSource::True;
    std::string output_dir = "out";
    std::uint64_t base_seed = 7;

    void validate() const;  // throws ConfigError
};

// Sets base_seed and rederives every per-task seed from it.
void apply_base_seed(RunConfig& config, std::uint64_t base_seed);

std::uint64_t split_seed(const RunConfig& config);

// Fail-closed parse: the nine top-level keys are required, nested keys are
// optional with defaults, and unknown keys anywhere are errors. Throws
// ConfigError naming the offending key.
RunConfig parse_run_config(const nlohmann::json& j);

RunConfig load_run_config(const std::filesystem::path& path);

// Canonical full serialization (every key explicit, sorted); parsing it back
// reproduces the config. Also the basis of the provenance digest.
nlohmann::json run_config_to_json(const RunConfig& config);

// FNV-1a over the canonical serialization, as a 16-digit hex string.
std::string config_digest(const RunConfig& config);

}  // namespace fairlend
