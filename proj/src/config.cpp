#include "fairlend/config.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <initializer_list>

#include "fairlend/errors.hpp"
#include "fairlend/rng.hpp"

namespace fairlend {

namespace {

using nlohmann::json;

void check_object(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* key : allowed) known = known || item.key() == key;
        if (!known) throw ConfigError(where + ": unknown key \"" + item.key() + "\"");
    }
}

double read_number(const json& j, const char* key, double current, const std::string& where) {
    if (!j.contains(key)) return current;
    if (!j.at(key).is_number()) throw ConfigError(where + "." + key + " must be a number");
    return j.at(key).get<double>();
}

std::size_t read_count(const json& j, const char* key, std::size_t current,
                       const std::string& where) {
    if (!j.contains(key)) return current;
    if (!j.at(key).is_number_unsigned()) {
        throw ConfigError(where + "." + key + " must be a non-negative integer");
    }
    return j.at(key).get<std::size_t>();
}

bool read_flag(const json& j, const char* key, bool current, const std::string& where) {
    if (!j.contains(key)) return current;
    if (!j.at(key).is_boolean()) throw ConfigError(where + "." + key + " must be a boolean");
    return j.at(key).get<bool>();
}

std::vector<double> read_number_array(const json& j, const char* key,
                                      std::vector<double> current, const std::string& where) {
    if (!j.contains(key)) return current;
    if (!j.at(key).is_array()) throw ConfigError(where + "." + key + " must be an array");
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) throw ConfigError(where + "." + key + " must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

CellValues read_cells(const json& j, const char* key, CellValues current,
                      const std::string& where) {
    if (!j.contains(key)) return current;
    const std::string inner = where + "." + key;
    const json& c = j.at(key);
    check_object(c, {"Male_GroupA", "Female_GroupA", "Male_GroupB", "Female_GroupB"}, inner);
    CellValues out;
    for (int cell = 0; cell < 4; ++cell) {
        const char* name = cell_name(cell);
        if (!c.contains(name)) {
            throw ConfigError(inner + ": missing key \"" + name + "\"");
        }
        if (!c.at(name).is_number()) {
            throw ConfigError(inner + "." + name + " must be a number");
        }
        out.at_index(cell) = c.at(name).get<double>();
    }
    return out;
}

json cells_to_json(const CellValues& cells) {
    json j;
    for (int cell = 0; cell < 4; ++cell) j[cell_name(cell)] = cells.at_index(cell);
    return j;
}

GenConfig parse_gen(const json& j, const std::string& where) {
    check_object(j,
                 {"n_applicants", "female_fraction", "group_b_fraction",
                  "income_mean_by_group", "income_sigma", "credit_mean", "credit_sigma",
                  "credit_mean_shift_group_b", "education_mean_by_group", "education_sigma",
                  "employment_mean", "age_range", "zipcode_count", "zipcode_race_correlation",
                  "true_label_coefficients", "true_label_intercept", "historical_bias_penalty"},
                 where);
    GenConfig gen;
    gen.n_applicants = read_count(j, "n_applicants", gen.n_applicants, where);
    gen.female_fraction = read_number(j, "female_fraction", gen.female_fraction, where);
    gen.group_b_fraction = read_number(j, "group_b_fraction", gen.group_b_fraction, where);
    gen.income_mean_by_group =
        read_cells(j, "income_mean_by_group", gen.income_mean_by_group, where);
    gen.income_sigma = read_number(j, "income_sigma", gen.income_sigma, where);
    gen.credit_mean = read_number(j, "credit_mean", gen.credit_mean, where);
    gen.credit_sigma = read_number(j, "credit_sigma", gen.credit_sigma, where);
    gen.credit_mean_shift_group_b =
        read_number(j, "credit_mean_shift_group_b", gen.credit_mean_shift_group_b, where);
    gen.education_mean_by_group =
        read_cells(j, "education_mean_by_group", gen.education_mean_by_group, where);
    gen.education_sigma = read_number(j, "education_sigma", gen.education_sigma, where);
    gen.employment_mean = read_number(j, "employment_mean", gen.employment_mean, where);
    if (j.contains("age_range")) {
        const auto range = read_number_array(j, "age_range", {}, where);
        if (range.size() != 2) {
            throw ConfigError(where + ".age_range must hold exactly [min, max]");
        }
        gen.age_range = {range[0], range[1]};
    }
    gen.zipcode_count = read_count(j, "zipcode_count", gen.zipcode_count, where);
    gen.zipcode_race_correlation =
        read_number(j, "zipcode_race_correlation", gen.zipcode_race_correlation, where);
    if (j.contains("true_label_coefficients")) {
        const json& coeffs = j.at("true_label_coefficients");
        if (!coeffs.is_object()) {
            throw ConfigError(where + ".true_label_coefficients must be a JSON object");
        }
        gen.true_label_coefficients.clear();
        for (const auto& item : coeffs.items()) {
            if (!item.value().is_number()) {
                throw ConfigError(where + ".true_label_coefficients." + item.key() +
                                  " must be a number");
            }
            gen.true_label_coefficients[item.key()] = item.value().get<double>();
        }
    }
    gen.true_label_intercept =
        read_number(j, "true_label_intercept", gen.true_label_intercept, where);
    gen.historical_bias_penalty =
        read_cells(j, "historical_bias_penalty", gen.historical_bias_penalty, where);
    return gen;
}

TrainHyperparams parse_hp(const json& j, const std::string& where) {
    check_object(j, {"learning_rate", "max_iterations", "l2_penalty", "convergence_tolerance"},
                 where);
    TrainHyperparams hp;
    hp.learning_rate = read_number(j, "learning_rate", hp.learning_rate, where);
    hp.max_iterations = read_count(j, "max_iterations", hp.max_iterations, where);
    hp.l2_penalty = read_number(j, "l2_penalty", hp.l2_penalty, where);
    hp.convergence_tolerance =
        read_number(j, "convergence_tolerance", hp.convergence_tolerance, where);
    return hp;
}

EconomicParams parse_econ(const json& j, const std::string& where) {
    check_object(j, {"interest_rate", "default_loss_rate", "loan_amount"}, where);
    EconomicParams econ;
    econ.interest_rate = read_number(j, "interest_rate", econ.interest_rate, where);
    econ.default_loss_rate = read_number(j, "default_loss_rate", econ.default_loss_rate, where);
    econ.loan_amount = read_number(j, "loan_amount", econ.loan_amount, where);
    return econ;
}

ScenarioGrid parse_grid(const json& j, const std::string& where) {
    check_object(j, {"interest_rates", "default_loss_rates", "loan_amount"}, where);
    ScenarioGrid grid;
    grid.interest_rates = read_number_array(j, "interest_rates", grid.interest_rates, where);
    grid.default_loss_rates =
        read_number_array(j, "default_loss_rates", grid.default_loss_rates, where);
    grid.loan_amount = read_number(j, "loan_amount", grid.loan_amount, where);
    return grid;
}

SimulationConfig parse_sim(const json& j, const EconomicParams& econ_default,
                           const std::string& where) {
    check_object(j, {"n_cycles", "credit_improvement", "retrain_each_cycle", "econ"}, where);
    SimulationConfig sim;
    sim.econ = econ_default;
    sim.n_cycles = read_count(j, "n_cycles", sim.n_cycles, where);
    sim.credit_improvement =
        read_number(j, "credit_improvement", sim.credit_improvement, where);
    sim.retrain_each_cycle = read_flag(j, "retrain_each_cycle", sim.retrain_each_cycle, where);
    if (j.contains("econ")) sim.econ = parse_econ(j.at("econ"), where + ".econ");
    return sim;
}

}  // namespace

void RunConfig::validate() const {
    gen.validate();
    hp.validate();
    econ_default.validate();
    grid.validate();
    sim.validate();
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
        throw ConfigError("split_fraction must lie strictly between 0 and 1");
    }
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

void apply_base_seed(RunConfig& config, std::uint64_t base_seed) {
    config.base_seed = base_seed;
    config.gen.seed = derive_seed(base_seed, "datagen");
    config.sim.seed = derive_seed(base_seed, "simulate");
}

std::uint64_t split_seed(const RunConfig& config) {
    return derive_seed(config.base_seed, "split");
}

RunConfig parse_run_config(const nlohmann::json& j) {
    check_object(j,
                 {"gen", "split_fraction", "hp", "econ_default", "grid", "sim", "eval_labels",
                  "output_dir", "base_seed"},
                 "config");
    for (const char* key : {"gen", "split_fraction", "hp", "econ_default", "grid", "sim",
                            "eval_labels", "output_dir", "base_seed"}) {
        if (!j.contains(key)) {
            throw ConfigError(std::string("config: missing required key \"") + key + "\"");
        }
    }
    RunConfig config;
    config.gen = parse_gen(j.at("gen"), "config.gen");
    if (!j.at("split_fraction").is_number()) {
        throw ConfigError("config.split_fraction must be a number");
    }
    config.split_fraction = j.at("split_fraction").get<double>();
    config.hp = parse_hp(j.at("hp"), "config.hp");
    config.econ_default = parse_econ(j.at("econ_default"), "config.econ_default");
    config.grid = parse_grid(j.at("grid"), "config.grid");
    config.sim = parse_sim(j.at("sim"), config.econ_default, "config.sim");
    if (!j.at("eval_labels").is_string()) {
        throw ConfigError("config.eval_labels must be \"true\" or \"observed\"");
    }
    const std::string labels = j.at("eval_labels").get<std::string>();
    if (labels != "true" && labels != "observed") {
        throw ConfigError("config.eval_labels must be \"true\" or \"observed\"");
    }
    config.eval_labels = label_source_from_name(labels);
    if (!j.at("output_dir").is_string()) {
        throw ConfigError("config.output_dir must be a string");
    }
    config.output_dir = j.at("output_dir").get<std::string>();
    if (!j.at("base_seed").is_number_unsigned()) {
        throw ConfigError("config.base_seed must be a non-negative integer");
    }
    apply_base_seed(config, j.at("base_seed").get<std::uint64_t>());
    config.validate();
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse: " + std::string(e.what()));
    }
    return parse_run_config(j);
}

nlohmann::json run_config_to_json(const RunConfig& config) {
    nlohmann::json j;
    nlohmann::json gen;
    gen["n_applicants"] = config.gen.n_applicants;
    gen["female_fraction"] = config.gen.female_fraction;
    gen["group_b_fraction"] = config.gen.group_b_fraction;
    gen["income_mean_by_group"] = cells_to_json(config.gen.income_mean_by_group);
    gen["income_sigma"] = config.gen.income_sigma;
    gen["credit_mean"] = config.gen.credit_mean;
    gen["credit_sigma"] = config.gen.credit_sigma;
    gen["credit_mean_shift_group_b"] = config.gen.credit_mean_shift_group_b;
    gen["education_mean_by_group"] = cells_to_json(config.gen.education_mean_by_group);
    gen["education_sigma"] = config.gen.education_sigma;
    gen["employment_mean"] = config.gen.employment_mean;
    gen["age_range"] = {config.gen.age_range[0], config.gen.age_range[1]};
    gen["zipcode_count"] = config.gen.zipcode_count;
    gen["zipcode_race_correlation"] = config.gen.zipcode_race_correlation;
    gen["true_label_coefficients"] = config.gen.true_label_coefficients;
    gen["true_label_intercept"] = config.gen.true_label_intercept;
    gen["historical_bias_penalty"] = cells_to_json(config.gen.historical_bias_penalty);
    j["gen"] = gen;
    j["split_fraction"] = config.split_fraction;
    j["hp"] = {{"learning_rate", config.hp.learning_rate},
               {"max_iterations", config.hp.max_iterations},
               {"l2_penalty", config.hp.l2_penalty},
               {"convergence_tolerance", config.hp.convergence_tolerance}};
    j["econ_default"] = {{"interest_rate", config.econ_default.interest_rate},
                         {"default_loss_rate", config.econ_default.default_loss_rate},
                         {"loan_amount", config.econ_default.loan_amount}};
    j["grid"] = {{"interest_rates", config.grid.interest_rates},
                 {"default_loss_rates", config.grid.default_loss_rates},
                 {"loan_amount", config.grid.loan_amount}};
    j["sim"] = {{"n_cycles", config.sim.n_cycles},
                {"credit_improvement", config.sim.credit_improvement},
                {"retrain_each_cycle", config.sim.retrain_each_cycle},
                {"econ",
                 {{"interest_rate", config.sim.econ.interest_rate},
                  {"default_loss_rate", config.sim.econ.default_loss_rate},
                  {"loan_amount", config.sim.econ.loan_amount}}}};
    j["eval_labels"] = label_source_name(config.eval_labels);
    j["output_dir"] = config.output_dir;
    j["base_seed"] = config.base_seed;
    return j;
}

std::string config_digest(const RunConfig& config) {
    const std::uint64_t h = fnv1a64(run_config_to_json(config).dump());
    std::array<char, 17> buf{};
    std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf.data(), 16);
}

}  // namespace fairlend
