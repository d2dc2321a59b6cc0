#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairlend/config.hpp"
#include "fairlend/datagen.hpp"
#include "fairlend/errors.hpp"
#include "fairlend/experiments.hpp"
#include "fairlend/longterm.hpp"
#include "fairlend/metrics.hpp"
#include "fairlend/model.hpp"
#include "fairlend/policy.hpp"
#include "fairlend/serialize.hpp"

namespace {

using fairlend::RunConfig;
using nlohmann::json;

namespace fs = std::filesystem;

struct GlobalFlags {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
    std::string labels;
    int jobs = 1;
};

RunConfig effective_config(const GlobalFlags& flags) {
    RunConfig config;
    if (!flags.config_path.empty()) {
        config = fairlend::load_run_config(flags.config_path);
    } else {
        fairlend::apply_base_seed(config, config.base_seed);
    }
    if (flags.seed_set) fairlend::apply_base_seed(config, flags.seed);
    if (!flags.out_dir.empty()) config.output_dir = flags.out_dir;
    if (!flags.labels.empty()) {
        config.eval_labels = fairlend::label_source_from_name(flags.labels);
    }
    config.validate();
    return config;
}

fs::path prepare_output_dir(const RunConfig& config) {
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    return dir;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw fairlend::DataError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

json provenance_block(const RunConfig& config, const std::string& command) {
    return {{"command", command},
            {"config_digest", fairlend::config_digest(config)},
            {"base_seed", config.base_seed},
            {"eval_labels", fairlend::label_source_name(config.eval_labels)}};
}

struct SuiteData {
    fairlend::Population train;
    fairlend::Population test;
    fairlend::PolicySuite suite;
};

SuiteData build_suite_data(const RunConfig& config) {
    const fairlend::Population pop = fairlend::generate_population(config.gen);
    auto [train, test] =
        fairlend::split_population(pop, config.split_fraction, fairlend::split_seed(config));
    fairlend::PolicySuite suite = fairlend::build_policy_suite(train, test, config.hp);
    return {std::move(train), std::move(test), std::move(suite)};
}

int cmd_generate(const GlobalFlags& flags) {
    const RunConfig config = effective_config(flags);
    const fs::path dir = prepare_output_dir(config);
    const fairlend::Population pop = fairlend::generate_population(config.gen);
    fairlend::write_population_csv(pop, dir / "population.csv");

    json sidecar = provenance_block(config, "generate");
    sidecar["gen_seed"] = config.gen.seed;
    sidecar["n_records"] = pop.size();
    write_json_file(dir / "population.provenance.json", sidecar);
    return 0;
}

int cmd_suite(const GlobalFlags& flags) {
    const RunConfig config = effective_config(flags);
    const fs::path dir = prepare_output_dir(config);
    const SuiteData data = build_suite_data(config);
    const std::vector<fairlend::MetricsReport> reports = fairlend::run_model_suite(
        data.suite, data.test, config.econ_default, config.eval_labels);

    {
        std::ofstream out(dir / "suite.csv");
        fairlend::write_metrics_csv(reports, out);
    }

    json compliance = json::array();
    for (const auto& report : reports) {
        compliance.push_back({{"model", report.model},
                              {"di_gender", std::isinf(report.gender.di_ratio)
                                                ? json("inf")
                                                : json(report.gender.di_ratio)},
                              {"ff_gender", report.gender.four_fifths_pass},
                              {"di_race", std::isinf(report.race.di_ratio)
                                              ? json("inf")
                                              : json(report.race.di_ratio)},
                              {"ff_race", report.race.four_fifths_pass}});
    }
    const auto weights = fairlend::default_weight_specs();
    const auto frontier = fairlend::efficiency_frontier(reports, weights);
    json efficiency = json::array();
    for (const auto& row : frontier) {
        efficiency.push_back({{"profit_weight", row.profit_weight},
                              {"model", row.model},
                              {"score", row.score},
                              {"is_best", row.is_best}});
    }

    json summary;
    summary["provenance"] = provenance_block(config, "suite");
    summary["econ"] = {{"interest_rate", config.econ_default.interest_rate},
                       {"default_loss_rate", config.econ_default.default_loss_rate},
                       {"loan_amount", config.econ_default.loan_amount}};
    summary["rows"] = reports.size();
    summary["compliance"] = compliance;
    summary["efficiency"] = efficiency;
    write_json_file(dir / "suite.summary.json", summary);
    return 0;
}

int cmd_sweep(const GlobalFlags& flags) {
    const RunConfig config = effective_config(flags);
    const fs::path dir = prepare_output_dir(config);
    const SuiteData data = build_suite_data(config);
    const std::vector<fairlend::MetricsReport> rows = fairlend::economic_sweep(
        data.suite, data.test, config.grid, config.eval_labels, flags.jobs);

    {
        std::ofstream out(dir / "sweep.csv");
        fairlend::write_metrics_csv(rows, out);
    }

    // Highlights: per model, the most profitable cell and how many cells turn
    // a profit at all.
    json best_cells = json::array();
    for (const auto& entry : data.suite) {
        const fairlend::MetricsReport* best = nullptr;
        std::size_t profitable = 0;
        for (const auto& row : rows) {
            if (row.model != entry.name) continue;
            if (row.profit.net_profit > 0.0) ++profitable;
            if (best == nullptr || row.profit.net_profit > best->profit.net_profit) {
                best = &row;
            }
        }
        best_cells.push_back({{"model", entry.name},
                              {"best_interest_rate", best->econ.interest_rate},
                              {"best_default_loss_rate", best->econ.default_loss_rate},
                              {"best_net_profit", best->profit.net_profit},
                              {"best_roi", best->profit.roi},
                              {"profitable_cells", profitable}});
    }

    json summary;
    summary["provenance"] = provenance_block(config, "sweep");
    summary["rows"] = rows.size();
    summary["grid"] = {{"interest_rates", config.grid.interest_rates},
                       {"default_loss_rates", config.grid.default_loss_rates},
                       {"loan_amount", config.grid.loan_amount}};
    summary["best_cells"] = best_cells;
    write_json_file(dir / "sweep.summary.json", summary);
    return 0;
}

int cmd_thresholds(const GlobalFlags& flags, double step) {
    const RunConfig config = effective_config(flags);
    const fs::path dir = prepare_output_dir(config);
    const fairlend::Population pop = fairlend::generate_population(config.gen);
    auto [train, test] =
        fairlend::split_population(pop, config.split_fraction, fairlend::split_seed(config));
    const fairlend::TrainedModel baseline = fairlend::train_logistic(
        train, fairlend::FeatureSchema::full(), fairlend::LabelSource::Observed, config.hp);
    const fairlend::ThresholdCurve curve = fairlend::threshold_sweep(
        baseline, test, config.econ_default, step, config.eval_labels, flags.jobs);

    {
        std::ofstream out(dir / "threshold_curve.csv");
        fairlend::write_threshold_curve_csv(curve, out);
    }

    json optima = json::array();
    for (const auto& w : fairlend::default_weight_specs()) {
        const auto best = fairlend::find_optimal_threshold(curve, w);
        optima.push_back({{"profit_weight", w.profit_weight},
                          {"threshold", best.threshold},
                          {"score", best.score}});
    }

    json summary;
    summary["provenance"] = provenance_block(config, "thresholds");
    summary["points"] = curve.points.size();
    summary["step"] = step;
    summary["optimal"] = optima;
    write_json_file(dir / "threshold_curve.summary.json", summary);
    return 0;
}

struct RecipePair {
    fairlend::ModelRecipe model;
    fairlend::PolicyRecipe policy;
};

RecipePair recipe_by_name(const std::string& name, const fairlend::TrainHyperparams& hp) {
    RecipePair pair;
    pair.model.hp = hp;
    if (name == "baseline") {
        pair.policy.provenance = "baseline";
    } else if (name == "unawareness") {
        pair.model.schema = fairlend::FeatureSchema::unaware();
        pair.policy.provenance = "unawareness";
    } else if (name == "counterfactual") {
        pair.model.labels = fairlend::LabelSource::True;
        pair.policy.provenance = "counterfactual";
    } else if (name == "dp_gender" || name == "dp_race") {
        pair.policy.provenance = "demographic_parity";
        pair.policy.attribute = name == "dp_gender" ? "gender" : "race";
    } else if (name == "eo_gender" || name == "eo_race") {
        pair.policy.provenance = "equal_opportunity";
        pair.policy.attribute = name == "eo_gender" ? "gender" : "race";
    } else {
        throw fairlend::ConfigError("unknown simulation recipe: " + name);
    }
    return pair;
}

int cmd_simulate(const GlobalFlags& flags, std::size_t cycles_override,
                 const std::string& recipe_name) {
    RunConfig config = effective_config(flags);
    if (cycles_override > 0) config.sim.n_cycles = cycles_override;
    const fs::path dir = prepare_output_dir(config);
    const fairlend::Population pop = fairlend::generate_population(config.gen);

    const RecipePair baseline = recipe_by_name("baseline", config.hp);
    const RecipePair fair = recipe_by_name(recipe_name, config.hp);
    const fairlend::SimulationResult base_result =
        fairlend::run_simulation(pop, baseline.model, baseline.policy, config.sim);
    const fairlend::SimulationResult fair_result =
        fairlend::run_simulation(pop, fair.model, fair.policy, config.sim);

    {
        std::ofstream out(dir / "simulation.csv");
        fairlend::write_trace_csv(fairlend::trace_to_table(base_result.trace), out);
    }
    {
        std::ofstream out(dir / "simulation_fair.csv");
        fairlend::write_trace_csv(fairlend::trace_to_table(fair_result.trace), out);
    }

    const auto gap_series = [](const fairlend::SimulationTrace& trace, bool race) {
        json series = json::array();
        for (const auto& c : trace.cycles) {
            series.push_back(race ? c.race_approval_gap : c.gender_approval_gap);
        }
        return series;
    };
    bool fair_race_gap_never_worse = true;
    for (std::size_t c = 0; c < config.sim.n_cycles; ++c) {
        if (fair_result.trace.cycles[c].race_approval_gap >
            base_result.trace.cycles[c].race_approval_gap) {
            fair_race_gap_never_worse = false;
        }
    }

    json summary;
    summary["provenance"] = provenance_block(config, "simulate");
    summary["cycles"] = config.sim.n_cycles;
    summary["comparison_recipe"] = recipe_name;
    summary["race_gap_by_cycle"] = {{"baseline", gap_series(base_result.trace, true)},
                                    {"comparison", gap_series(fair_result.trace, true)}};
    summary["gender_gap_by_cycle"] = {{"baseline", gap_series(base_result.trace, false)},
                                      {"comparison", gap_series(fair_result.trace, false)}};
    summary["comparison_race_gap_never_worse"] = fair_race_gap_never_worse;
    const auto& last_base = base_result.trace.cycles.back();
    const auto& last_fair = fair_result.trace.cycles.back();
    summary["final_mean_credit"] = {
        {"baseline",
         {{"GroupA", last_base.race_groups[0].mean_credit_score},
          {"GroupB", last_base.race_groups[1].mean_credit_score}}},
        {"comparison",
         {{"GroupA", last_fair.race_groups[0].mean_credit_score},
          {"GroupB", last_fair.race_groups[1].mean_credit_score}}}};
    write_json_file(dir / "simulation.summary.json", summary);
    return 0;
}

int cmd_impact(const GlobalFlags& flags, const std::string& base_name) {
    const RunConfig config = effective_config(flags);
    const fs::path dir = prepare_output_dir(config);
    const fairlend::Population pop = fairlend::generate_population(config.gen);
    auto [train, test] =
        fairlend::split_population(pop, config.split_fraction, fairlend::split_seed(config));
    const fairlend::FeatureSchema base = base_name == "full"
                                             ? fairlend::FeatureSchema::full()
                                             : fairlend::FeatureSchema::unaware();
    const fairlend::FeatureImpactReport report = fairlend::feature_fairness_impact(
        train, test, config.hp, base, fairlend::LabelSource::Observed, flags.jobs);

    {
        std::ofstream out(dir / "feature_impact.csv");
        fairlend::write_feature_impact_csv(report, out);
    }

    const fairlend::FeatureImpact* worst_gender = nullptr;
    const fairlend::FeatureImpact* worst_race = nullptr;
    for (const auto& impact : report.impacts) {
        if (worst_gender == nullptr || impact.delta_dp_gender < worst_gender->delta_dp_gender) {
            worst_gender = &impact;
        }
        if (worst_race == nullptr || impact.delta_dp_race < worst_race->delta_dp_race) {
            worst_race = &impact;
        }
    }

    json summary;
    summary["provenance"] = provenance_block(config, "impact");
    summary["base_schema"] = report.base_schema.feature_names;
    summary["base_dp_gender"] = report.base_dp_gender;
    summary["base_dp_race"] = report.base_dp_race;
    summary["largest_negative_gender_impact"] = {
        {"feature", worst_gender->feature}, {"delta", worst_gender->delta_dp_gender}};
    summary["largest_negative_race_impact"] = {{"feature", worst_race->feature},
                                               {"delta", worst_race->delta_dp_race}};
    write_json_file(dir / "feature_impact.summary.json", summary);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic fair-lending simulation engine"};
    app.require_subcommand(1);

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "Path to a run-config JSON file");
    auto* seed_opt =
        app.add_option("--seed", flags.seed, "Base seed overriding the config value");
    app.add_option("--out", flags.out_dir, "Output directory overriding the config value");
    app.add_option("--labels", flags.labels, "Evaluation labels: true or observed")
        ->check(CLI::IsMember({"true", "observed"}));
    app.add_option("--jobs", flags.jobs, "Worker threads for sweeps (default 1)")
        ->check(CLI::PositiveNumber);

    auto* generate = app.add_subcommand("generate", "Generate the synthetic population CSV");
    generate->fallthrough();
    auto* suite = app.add_subcommand("suite", "Seven-model comparison table");
    suite->fallthrough();
    auto* sweep = app.add_subcommand("sweep", "Economic scenario grid sweep");
    sweep->fallthrough();

    double step = fairlend::kDefaultThresholdStep;
    auto* thresholds =
        app.add_subcommand("thresholds", "Uniform-threshold profit/fairness curve");
    thresholds->fallthrough();
    thresholds->add_option("--step", step, "Threshold grid step (default 0.01)")
        ->check(CLI::Range(1e-6, 0.5));

    std::size_t cycles = 0;
    std::string recipe = "dp_race";
    auto* simulate = app.add_subcommand("simulate", "Multi-cycle feedback simulation");
    simulate->fallthrough();
    simulate->add_option("--cycles", cycles, "Number of lending cycles (overrides config)");
    simulate->add_option("--recipe", recipe, "Comparison recipe (default dp_race)")
        ->check(CLI::IsMember({"baseline", "unawareness", "counterfactual", "dp_gender",
                               "dp_race", "eo_gender", "eo_race"}));

    std::string base_schema = "unaware";
    auto* impact = app.add_subcommand("impact", "Leave-one-feature-out fairness impact");
    impact->fallthrough();
    impact->add_option("--base", base_schema, "Base schema: unaware or full")
        ->check(CLI::IsMember({"unaware", "full"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    flags.seed_set = seed_opt->count() > 0;

    try {
        if (generate->parsed()) return cmd_generate(flags);
        if (suite->parsed()) return cmd_suite(flags);
        if (sweep->parsed()) return cmd_sweep(flags);
        if (thresholds->parsed()) return cmd_thresholds(flags, step);
        if (simulate->parsed()) return cmd_simulate(flags, cycles, recipe);
        if (impact->parsed()) return cmd_impact(flags, base_schema);
        std::cerr << "error: no command given\n";
        return 2;
    } catch (const fairlend::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
