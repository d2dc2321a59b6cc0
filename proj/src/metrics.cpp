#include "fairlend/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "fairlend/errors.hpp"

namespace fairlend {

void EconomicParams::validate() const {
    if (!(interest_rate >= 0.0) || !std::isfinite(interest_rate)) {
        throw ConfigError("interest_rate must be a finite value >= 0");
    }
    if (!(default_loss_rate >= 0.0 && default_loss_rate <= 1.0)) {
        throw ConfigError("default_loss_rate must lie in [0, 1]");
    }
    if (!(loan_amount > 0.0) || !std::isfinite(loan_amount)) {
        throw ConfigError("loan_amount must be a finite value > 0");
    }
}

void WeightSpec::validate() const {
    if (!(profit_weight >= 0.0 && profit_weight <= 1.0)) {
        throw ConfigError("profit_weight must lie in [0, 1]");
    }
}

std::vector<int> label_vector(const Population& pop, LabelSource source) {
    std::vector<int> labels;
    labels.reserve(pop.size());
    for (const auto& rec : pop.records) labels.push_back(label_of(rec, source));
    return labels;
}

ProfitReport compute_profit(const DecisionSet& decisions, std::span<const int> labels,
                            const EconomicParams& econ) {
    econ.validate();
    if (labels.size() != decisions.size()) {
        throw DataError("compute_profit: one label per decision required");
    }
    ProfitReport report;
    double profit = 0.0;
    std::size_t defaults = 0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        if (!decisions.decisions[i].approved) continue;
        ++report.approved_count;
        if (labels[i] != 0) {
            profit += econ.interest_rate * econ.loan_amount;
        } else {
            profit -= econ.default_loss_rate * econ.loan_amount;
            ++defaults;
        }
    }
    report.net_profit = profit;
    if (report.approved_count > 0) {
        const auto approved = static_cast<double>(report.approved_count);
        report.roi = profit / (approved * econ.loan_amount);
        report.default_rate = static_cast<double>(defaults) / approved;
    }
    if (!decisions.decisions.empty()) {
        report.approval_rate = static_cast<double>(report.approved_count) /
                               static_cast<double>(decisions.size());
    }
    return report;
}

namespace {

struct GroupCounts {
    std::array<std::size_t, 2> members{0, 0};
    std::array<std::size_t, 2> approved{0, 0};

    double rate(std::size_t g) const {
        return static_cast<double>(approved[g]) / static_cast<double>(members[g]);
    }
};

// Tallies per-group membership and approvals; when `positive_labels` is
// nonempty only positive-label records count (yielding TPRs instead of rates).
GroupCounts tally(const DecisionSet& decisions, std::span<const int> groups,
                  std::span<const int> positive_labels, const char* what) {
    if (groups.size() != decisions.size()) {
        throw DataError(std::string(what) + ": one group label per decision required");
    }
    if (!positive_labels.empty() && positive_labels.size() != decisions.size()) {
        throw DataError(std::string(what) + ": one outcome label per decision required");
    }
    GroupCounts counts;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const int g = groups[i];
        if (g != 0 && g != 1) {
            throw DataError(std::string(what) + ": group value must be 0 or 1");
        }
        if (!positive_labels.empty() && positive_labels[i] == 0) continue;
        ++counts.members[static_cast<std::size_t>(g)];
        counts.approved[static_cast<std::size_t>(g)] +=
            static_cast<std::size_t>(decisions.decisions[i].approved);
    }
    return counts;
}

}  // namespace

double demographic_parity_diff(const DecisionSet& decisions, std::span<const int> groups) {
    const GroupCounts c = tally(decisions, groups, {}, "demographic_parity_diff");
    if (c.members[0] == 0 || c.members[1] == 0) {
        throw DataError("demographic_parity_diff: both groups must be nonempty");
    }
    return std::abs(c.rate(1) - c.rate(0));
}

double equal_opportunity_diff(const DecisionSet& decisions, std::span<const int> groups,
                              std::span<const int> positive_labels) {
    const GroupCounts c = tally(decisions, groups, positive_labels, "equal_opportunity_diff");
    if (c.members[0] == 0 || c.members[1] == 0) {
        throw DataError("equal_opportunity_diff: each group needs at least one positive");
    }
    return std::abs(c.rate(1) - c.rate(0));
}

double disparate_impact_ratio(const DecisionSet& decisions, std::span<const int> groups,
                              int disadvantaged) {
    if (disadvantaged != 0 && disadvantaged != 1) {
        throw DataError("disparate_impact_ratio: disadvantaged group must be 0 or 1");
    }
    const GroupCounts c = tally(decisions, groups, {}, "disparate_impact_ratio");
    if (c.members[0] == 0 || c.members[1] == 0) {
        throw DataError("disparate_impact_ratio: both groups must be nonempty");
    }
    const auto dis = static_cast<std::size_t>(disadvantaged);
    const double dis_rate = c.rate(dis);
    const double adv_rate = c.rate(1 - dis);
    if (adv_rate == 0.0) {
        return dis_rate == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
    return dis_rate / adv_rate;
}

bool check_four_fifths(double di_ratio) { return di_ratio >= 0.8; }

double individual_consistency(const TrainedModel& model, const Population& pop) {
    if (pop.records.empty()) return 1.0;
    double total_diff = 0.0;
    for (const auto& rec : pop.records) {
        ApplicantRecord flipped = rec;
        flipped.gender = rec.gender == Gender::Male ? Gender::Female : Gender::Male;
        flipped.race = rec.race == Race::GroupA ? Race::GroupB : Race::GroupA;
        total_diff += std::abs(model.score(rec) - model.score(flipped));
    }
    return 1.0 - total_diff / static_cast<double>(pop.size());
}

namespace {

// Normalized position of v in [lo, hi]; a collapsed axis normalizes to 1 so it
// contributes its full weight.
double minmax_unit(double v, double lo, double hi) {
    if (!(hi > lo)) return 1.0;
    return (v - lo) / (hi - lo);
}

}  // namespace

double efficiency_score(double net_profit, double fairness_gap,
                        const NormalizationContext& context, const WeightSpec& weights) {
    weights.validate();
    const double profit_term = minmax_unit(net_profit, context.min_profit, context.max_profit);
    // A collapsed gap axis must also contribute fully, so normalize the
    // *complement* directly rather than 1 - minmax_unit(gap).
    const double fairness_term =
        context.max_gap > context.min_gap
            ? 1.0 - (fairness_gap - context.min_gap) / (context.max_gap - context.min_gap)
            : 1.0;
    return weights.profit_weight * profit_term + weights.fairness_weight() * fairness_term;
}

double mean_dp_gap(const MetricsReport& report) {
    return 0.5 * (report.gender.dp_diff + report.race.dp_diff);
}

NormalizationContext normalization_context(std::span<const MetricsReport> suite) {
    if (suite.empty()) throw DataError("normalization context needs at least one report");
    NormalizationContext ctx;
    ctx.min_profit = ctx.max_profit = suite.front().profit.net_profit;
    ctx.min_gap = ctx.max_gap = mean_dp_gap(suite.front());
    for (const auto& r : suite) {
        ctx.min_profit = std::min(ctx.min_profit, r.profit.net_profit);
        ctx.max_profit = std::max(ctx.max_profit, r.profit.net_profit);
        const double gap = mean_dp_gap(r);
        ctx.min_gap = std::min(ctx.min_gap, gap);
        ctx.max_gap = std::max(ctx.max_gap, gap);
    }
    return ctx;
}

AttributeFairness attribute_fairness(const DecisionSet& decisions, std::span<const int> groups,
                                     std::span<const int> positive_labels) {
    AttributeFairness f;
    f.dp_diff = demographic_parity_diff(decisions, groups);
    f.eo_diff = equal_opportunity_diff(decisions, groups, positive_labels);
    f.di_ratio = disparate_impact_ratio(decisions, groups, 1);
    f.four_fifths_pass = check_four_fifths(f.di_ratio);
    return f;
}

MetricsReport evaluate_policy(const std::string& name, const TrainedModel& model,
                              const DecisionPolicy& policy, const Population& pop,
                              LabelSource labels, const EconomicParams& econ) {
    econ.validate();
    const DecisionSet decisions = decide(policy, model, pop);
    const std::vector<int> outcomes = label_vector(pop, labels);
    const std::vector<int> genders = group_values(pop, "gender");
    const std::vector<int> races = group_values(pop, "race");

    MetricsReport report;
    report.model = name;
    report.policy = policy.provenance;
    report.labels = labels;
    report.econ = econ;
    report.profit = compute_profit(decisions, outcomes, econ);
    report.gender = attribute_fairness(decisions, genders, outcomes);
    report.race = attribute_fairness(decisions, races, outcomes);
    report.consistency = individual_consistency(model, pop);
    return report;
}

}  // namespace fairlend
