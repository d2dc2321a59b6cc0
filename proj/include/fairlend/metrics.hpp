#pragma once

#include <span>
#include <string>
#include <vector>

#include "fairlend/model.hpp"
#include "fairlend/policy.hpp"

namespace fairlend {

struct EconomicParams {
    double interest_rate = 0.10;    // r, fraction of loan amount earned on repayment
    double default_loss_rate = 0.70;  // d, fraction of loan amount lost on default
    double loan_amount = 10000.0;   // L, identical for all applicants

    void validate() const;  // throws ConfigError
    static EconomicParams defaults() { return {}; }
};

struct ProfitReport {
    double net_profit = 0.0;
    double roi = 0.0;          // net_profit / (approved_count * L); 0 when nobody approved
    double default_rate = 0.0;  // fraction of approved that defaulted
    double approval_rate = 0.0;
    std::size_t approved_count = 0;
};

// One protected attribute's group-fairness readings. The disadvantaged group
// (Female / GroupB, enum value 1) sits in the disparate-impact numerator.
struct AttributeFairness {
    double dp_diff = 0.0;
    double eo_diff = 0.0;
    double di_ratio = 1.0;  // +infinity when only the advantaged rate is zero
    bool four_fifths_pass = true;
};

struct WeightSpec {
    double profit_weight = 0.5;  // remaining weight goes to fairness

    double fairness_weight() const { return 1.0 - profit_weight; }
    void validate() const;  // throws ConfigError
};

// Min/max envelope of a model suite, the frame efficiency scores normalize in.
struct NormalizationContext {
    double min_profit = 0.0;
    double max_profit = 0.0;
    double min_gap = 0.0;
    double max_gap = 0.0;
};

// Everything reported for one (model, policy, economy) evaluation.
struct MetricsReport {
    std::string model;   // display name of the suite entry
    std::string policy;  // policy provenance
    LabelSource labels = LabelSource::True;
    EconomicParams econ;
    ProfitReport profit;
    AttributeFairness gender;
    AttributeFairness race;
    double consistency = 1.0;  // attribute-flip score stability, 1 = unaffected
};

// Labels for every record under the given source, in population order.
std::vector<int> label_vector(const Population& pop, LabelSource source);

// Net profit = sum over approved of [y*r*L - (1-y)*d*L]. Labels align with the
// decision order; an empty approval set yields an all-zero report.
ProfitReport compute_profit(const DecisionSet& decisions, std::span<const int> labels,
                            const EconomicParams& econ);

// |approval_rate(group 1) - approval_rate(group 0)|; both groups must be
// nonempty.
double demographic_parity_diff(const DecisionSet& decisions, std::span<const int> groups);

// |TPR(group 1) - TPR(group 0)| where TPR = approved positives / positives;
// each group needs at least one positive.
double equal_opportunity_diff(const DecisionSet& decisions, std::span<const int> groups,
                              std::span<const int> positive_labels);

// approval_rate(disadvantaged) / approval_rate(other). Both rates zero -> 1;
// only the advantaged rate zero -> +infinity.
double disparate_impact_ratio(const DecisionSet& decisions, std::span<const int> groups,
                              int disadvantaged);

// The four-fifths rule: the disadvantaged group's approval rate must reach 80%
// of the advantaged group's. Ratios above 1 pass.
bool check_four_fifths(double di_ratio);

// 1 - mean |score(x) - score(x with gender and race both flipped)|. Exactly 1
// for any model whose schema excludes the protected attributes.
double individual_consistency(const TrainedModel& model, const Population& pop);

// w * normalized(profit) + (1-w) * (1 - normalized(gap)), min-max normalized
// inside `context`. A degenerate axis (min == max) contributes its full
// weight. The gap is conventionally the mean of the two DP differences.
double efficiency_score(double net_profit, double fairness_gap,
                        const NormalizationContext& context, const WeightSpec& weights);

// Mean of the two demographic-parity differences, the fairness axis used by
// efficiency scoring.
double mean_dp_gap(const MetricsReport& report);

NormalizationContext normalization_context(std::span<const MetricsReport> suite);

// DP, EO, DI, and the four-fifths flag for one attribute, with group 1
// (Female / GroupB) as the disadvantaged side.
AttributeFairness attribute_fairness(const DecisionSet& decisions, std::span<const int> groups,
                                     std::span<const int> positive_labels);

// Runs the policy on `pop`, then assembles profit, per-attribute fairness, and
// consistency into one report. `labels` selects the evaluation ground truth
// for profit outcomes and EO positives.
MetricsReport evaluate_policy(const std::string& name, const TrainedModel& model,
                              const DecisionPolicy& policy, const Population& pop,
                              LabelSource labels, const EconomicParams& econ);

}  // namespace fairlend
