#include "fairlend/longterm.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fairlend/errors.hpp"
#include "fairlend/rng.hpp"

namespace fairlend {

void SimulationConfig::validate() const {
    if (n_cycles < 1) throw ConfigError("n_cycles must be at least 1");
    if (!(credit_improvement >= 0.0) || !std::isfinite(credit_improvement)) {
        throw ConfigError("credit_improvement must be a finite value >= 0");
    }
    econ.validate();
}

void ModelRecipe::validate() const {
    schema.validate();
    hp.validate();
}

void PolicyRecipe::validate() const {
    static const char* kKinds[] = {"baseline",           "unawareness",
                                   "counterfactual",      "demographic_parity",
                                   "equal_opportunity",   "manual"};
    if (std::find(std::begin(kKinds), std::end(kKinds), provenance) == std::end(kKinds)) {
        throw ConfigError("unknown policy recipe provenance: " + provenance);
    }
    if (calibrated() && attribute != "gender" && attribute != "race") {
        throw ConfigError("calibrated policy recipe needs attribute \"gender\" or \"race\"");
    }
    if (!(uniform_threshold >= 0.0 && uniform_threshold <= 1.0)) {
        throw ConfigError("policy recipe uniform_threshold must lie in [0, 1]");
    }
}

namespace {

DecisionPolicy build_cycle_policy(const PolicyRecipe& recipe, const TrainedModel& model,
                                  const Population& pop) {
    if (!recipe.calibrated()) {
        return DecisionPolicy::uniform(recipe.uniform_threshold, recipe.provenance);
    }
    const std::vector<double> scores = score_all(model, pop);
    const std::vector<int> groups = group_values(pop, recipe.attribute);
    std::size_t approved = 0;
    for (double s : scores) approved += static_cast<std::size_t>(s >= recipe.uniform_threshold);
    if (recipe.provenance == "demographic_parity") {
        const double ref = static_cast<double>(approved) / static_cast<double>(scores.size());
        return calibrate_demographic_parity(scores, groups, ref, kDpCalibrationTolerance,
                                            recipe.attribute);
    }
    const std::vector<int> labels = label_vector(pop, LabelSource::Observed);
    std::size_t positives = 0, true_positives = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] == 0) continue;
        ++positives;
        true_positives += static_cast<std::size_t>(scores[i] >= recipe.uniform_threshold);
    }
    if (positives == 0) {
        throw CalibrationError("equal-opportunity recipe: population has no positive labels");
    }
    const double ref = static_cast<double>(true_positives) / static_cast<double>(positives);
    return calibrate_equal_opportunity(scores, groups, labels, ref, kEoCalibrationTolerance,
                                       recipe.attribute);
}

struct SubgroupTally {
    std::size_t members = 0;
    std::size_t approved = 0;
    double credit_sum = 0.0;
    double profit = 0.0;

    GroupCycleStats stats() const {
        GroupCycleStats s;
        if (members > 0) {
            s.approval_rate =
                static_cast<double>(approved) / static_cast<double>(members);
            s.mean_credit_score = credit_sum / static_cast<double>(members);
        }
        s.net_profit = profit;
        return s;
    }
};

}  // namespace

SimulationResult run_simulation(const Population& initial_pop, const ModelRecipe& model_recipe,
                                const PolicyRecipe& policy_recipe,
                                const SimulationConfig& sim) {
    sim.validate();
    model_recipe.validate();
    policy_recipe.validate();
    if (initial_pop.empty()) throw DataError("simulation needs a non-empty population");
    if (initial_pop.label_model.coefficients.empty()) {
        throw DataError("simulation needs the generator's label model to update "
                        "repayment probabilities");
    }

    SimulationResult result;
    result.final_population = initial_pop;
    Population& pop = result.final_population;

    TrainedModel model;
    bool have_model = false;

    for (std::size_t cycle = 1; cycle <= sim.n_cycles; ++cycle) {
        if (!have_model || sim.retrain_each_cycle) {
            model = train_logistic(pop, model_recipe.schema, model_recipe.labels,
                                   model_recipe.hp);
            have_model = true;
        }
        const DecisionPolicy policy = build_cycle_policy(policy_recipe, model, pop);
        const DecisionSet decisions = decide(policy, model, pop);

        std::vector<char> approved_now(pop.size(), 0);
        for (std::size_t i = 0; i < pop.size(); ++i) {
            if (!decisions.decisions[i].approved) continue;
            approved_now[i] = 1;
            pop.records[i].credit_score =
                std::min(kMaxCreditScore, pop.records[i].credit_score + sim.credit_improvement);
        }

        // Fresh outcomes from the updated probabilities; keyed draws make the
        // cycle reproducible independent of evaluation order.
        for (auto& rec : pop.records) {
            rec.true_repay_prob = pop.label_model.repay_probability(rec);
            rec.true_repaid =
                keyed_uniform01(sim.seed, cycle, rec.id, 0) < rec.true_repay_prob ? 1 : 0;
        }

        CycleRecord record;
        record.cycle = cycle;
        std::array<SubgroupTally, 4> cells;
        std::array<SubgroupTally, 2> races;
        std::array<SubgroupTally, 2> genders;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            const auto& rec = pop.records[i];
            const bool app = approved_now[i] != 0;
            const double loan_profit =
                rec.true_repaid != 0
                    ? sim.econ.interest_rate * sim.econ.loan_amount
                    : -sim.econ.default_loss_rate * sim.econ.loan_amount;
            const auto add = [&](SubgroupTally& t) {
                ++t.members;
                t.credit_sum += rec.credit_score;
                if (app) {
                    ++t.approved;
                    t.profit += loan_profit;
                }
            };
            add(cells[static_cast<std::size_t>(cell_index(rec.gender, rec.race))]);
            add(races[static_cast<std::size_t>(rec.race)]);
            add(genders[static_cast<std::size_t>(rec.gender)]);
        }
        for (std::size_t c = 0; c < 4; ++c) record.cells[c] = cells[c].stats();
        for (std::size_t g = 0; g < 2; ++g) record.race_groups[g] = races[g].stats();
        record.gender_approval_gap =
            std::abs(genders[1].stats().approval_rate - genders[0].stats().approval_rate);
        record.race_approval_gap =
            std::abs(races[1].stats().approval_rate - races[0].stats().approval_rate);

        result.trace.cycles.push_back(record);
        result.approvals.push_back(std::move(approved_now));
    }
    return result;
}

namespace {

constexpr const char* kGroupMetrics[3] = {"approval_rate", "mean_credit_score", "net_profit"};
constexpr const char* kGapMetric = "approval_rate_gap";

double metric_value(const GroupCycleStats& s, std::size_t metric) {
    switch (metric) {
        case 0: return s.approval_rate;
        case 1: return s.mean_credit_score;
        default: return s.net_profit;
    }
}

double& metric_slot(GroupCycleStats& s, const std::string& metric) {
    if (metric == kGroupMetrics[0]) return s.approval_rate;
    if (metric == kGroupMetrics[1]) return s.mean_credit_score;
    if (metric == kGroupMetrics[2]) return s.net_profit;
    throw DataError("unknown trace metric: " + metric);
}

}  // namespace

std::vector<TraceRow> trace_to_table(const SimulationTrace& trace) {
    if (trace.cycles.empty()) throw DataError("trace table needs at least one cycle");
    std::vector<TraceRow> rows;
    rows.reserve(trace.cycles.size() * 20);
    for (const auto& rec : trace.cycles) {
        for (std::size_t c = 0; c < 4; ++c) {
            for (std::size_t m = 0; m < 3; ++m) {
                rows.push_back({rec.cycle, "cell", cell_name(static_cast<int>(c)),
                                kGroupMetrics[m], metric_value(rec.cells[c], m)});
            }
        }
        for (std::size_t g = 0; g < 2; ++g) {
            for (std::size_t m = 0; m < 3; ++m) {
                rows.push_back({rec.cycle, "race", race_name(static_cast<Race>(g)),
                                kGroupMetrics[m], metric_value(rec.race_groups[g], m)});
            }
        }
        rows.push_back({rec.cycle, "gender", "all", kGapMetric, rec.gender_approval_gap});
        rows.push_back({rec.cycle, "race", "all", kGapMetric, rec.race_approval_gap});
    }
    return rows;
}

SimulationTrace trace_from_table(const std::vector<TraceRow>& rows) {
    if (rows.empty()) throw DataError("trace table is empty");
    std::map<std::size_t, CycleRecord> by_cycle;
    for (const auto& row : rows) {
        if (row.cycle < 1) throw DataError("trace cycles must start at 1");
        CycleRecord& rec = by_cycle[row.cycle];
        rec.cycle = row.cycle;
        if (row.metric == kGapMetric) {
            if (row.attribute == "gender") {
                rec.gender_approval_gap = row.value;
            } else if (row.attribute == "race") {
                rec.race_approval_gap = row.value;
            } else {
                throw DataError("gap row with unknown attribute: " + row.attribute);
            }
            continue;
        }
        if (row.attribute == "cell") {
            int cell = -1;
            for (int c = 0; c < 4; ++c) {
                if (row.group == cell_name(c)) cell = c;
            }
            if (cell < 0) throw DataError("unknown cell name: " + row.group);
            metric_slot(rec.cells[static_cast<std::size_t>(cell)], row.metric) = row.value;
        } else if (row.attribute == "race") {
            int g = row.group == race_name(Race::GroupA)   ? 0
                    : row.group == race_name(Race::GroupB) ? 1
                                                           : -1;
            if (g < 0) throw DataError("unknown race group: " + row.group);
            metric_slot(rec.race_groups[static_cast<std::size_t>(g)], row.metric) = row.value;
        } else {
            throw DataError("unknown trace attribute: " + row.attribute);
        }
    }
    SimulationTrace trace;
    std::size_t expected = 1;
    for (auto& [cycle, rec] : by_cycle) {
        if (cycle != expected) throw DataError("trace cycles must be contiguous from 1");
        ++expected;
        trace.cycles.push_back(std::move(rec));
    }
    return trace;
}

}  // namespace fairlend
