#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fairlend/datagen.hpp"
#include "fairlend/metrics.hpp"
#include "fairlend/model.hpp"
#include "fairlend/policy.hpp"

namespace fairlend {

inline constexpr double kMaxCreditScore = 850.0;

struct SimulationConfig {
    std::size_t n_cycles = 5;
    double credit_improvement = 15.0;  // score points granted per approved cycle
    bool retrain_each_cycle = false;
    EconomicParams econ;
    std::uint64_t seed = 42;

    void validate() const;  // throws ConfigError
};

// How the lender's model is (re)built each cycle.
struct ModelRecipe {
    FeatureSchema schema = FeatureSchema::full();
    LabelSource labels = LabelSource::Observed;
    TrainHyperparams hp;

    void validate() const;
};

// How the decision policy is rebuilt each cycle. Calibrated kinds recalibrate
// against the current cycle's scores, anchored to the overall rate (or TPR)
// the uniform threshold would produce on the current population.
struct PolicyRecipe {
    std::string provenance = "baseline";  // baseline, unawareness, counterfactual,
                                          // demographic_parity, equal_opportunity, manual
    std::string attribute;                // required for the calibrated kinds
    double uniform_threshold = 0.5;

    bool calibrated() const {
        return provenance == "demographic_parity" || provenance == "equal_opportunity";
    }
    void validate() const;
};

struct GroupCycleStats {
    double approval_rate = 0.0;
    double mean_credit_score = 0.0;
    double net_profit = 0.0;
};

// End-of-cycle snapshot: per (gender, race) cell, per race group, and the
// population-wide approval-rate gap per attribute.
struct CycleRecord {
    std::size_t cycle = 0;  // 1-based, contiguous
    std::array<GroupCycleStats, 4> cells;        // indexed by cell_index
    std::array<GroupCycleStats, 2> race_groups;  // GroupA, GroupB
    double gender_approval_gap = 0.0;
    double race_approval_gap = 0.0;
};

struct SimulationTrace {
    std::vector<CycleRecord> cycles;
};

struct SimulationResult {
    SimulationTrace trace;
    Population final_population;
    // approvals[c][i]: whether record i (by input order) was approved in cycle
    // c+1; kept for feedback-dynamics analysis.
    std::vector<std::vector<char>> approvals;
};

// Repeated lending cycles with credit-score feedback. Per cycle: train or
// reuse the model, rebuild the policy, decide over the whole population,
// raise approved applicants' credit scores (clamped at 850), recompute true
// repayment probabilities from the generator's stored label model, draw the
// cycle's repayment outcomes keyed by (seed, cycle, id), and record a trace
// row from the end-of-cycle state.
SimulationResult run_simulation(const Population& initial_pop, const ModelRecipe& model_recipe,
                                const PolicyRecipe& policy_recipe, const SimulationConfig& sim);

struct TraceRow {
    std::size_t cycle = 0;
    std::string attribute;  // "cell", "race", "gender"
    std::string group;      // cell or group name; "all" for gap rows
    std::string metric;
    double value = 0.0;
};

// Long-form rows in a stable order: per cycle, the four cells then the two
// race groups (approval_rate, mean_credit_score, net_profit each), then the
// gender and race approval-rate gaps.
std::vector<TraceRow> trace_to_table(const SimulationTrace& trace);

// Inverse of trace_to_table; throws DataError on malformed input.
SimulationTrace trace_from_table(const std::vector<TraceRow>& rows);

}  // namespace fairlend
