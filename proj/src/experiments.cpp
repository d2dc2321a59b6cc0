#include "fairlend/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "fairlend/errors.hpp"
#include "fairlend/parallel.hpp"

namespace fairlend {

void ScenarioGrid::validate() const {
    if (interest_rates.empty()) throw ConfigError("scenario grid needs at least one interest_rate");
    if (default_loss_rates.empty()) {
        throw ConfigError("scenario grid needs at least one default_loss_rate");
    }
    for (std::size_t i = 0; i < interest_rates.size(); ++i) {
        EconomicParams probe{interest_rates[i], 0.5, loan_amount};
        probe.validate();
    }
    for (std::size_t i = 0; i < default_loss_rates.size(); ++i) {
        EconomicParams probe{0.0, default_loss_rates[i], loan_amount};
        probe.validate();
    }
}

EconomicParams ScenarioGrid::cell(std::size_t rate_idx, std::size_t loss_idx) const {
    return {interest_rates.at(rate_idx), default_loss_rates.at(loss_idx), loan_amount};
}

std::vector<MetricsReport> run_model_suite(const PolicySuite& suite, const Population& test,
                                           const EconomicParams& econ, LabelSource labels) {
    econ.validate();
    std::vector<MetricsReport> reports;
    reports.reserve(suite.size());
    for (const auto& entry : suite) {
        reports.push_back(
            evaluate_policy(entry.name, entry.model, entry.policy, test, labels, econ));
    }
    return reports;
}

std::vector<MetricsReport> run_model_suite(const Population& train, const Population& test,
                                           const EconomicParams& econ,
                                           const TrainHyperparams& hp, LabelSource labels) {
    return run_model_suite(build_policy_suite(train, test, hp), test, econ, labels);
}

std::vector<MetricsReport> economic_sweep(const PolicySuite& suite, const Population& test,
                                          const ScenarioGrid& grid, LabelSource labels,
                                          int jobs) {
    grid.validate();
    if (suite.empty()) throw DataError("economic sweep needs at least one suite entry");
    if (test.records.empty()) throw DataError("economic sweep needs a non-empty test split");

    const std::vector<int> outcomes = label_vector(test, labels);
    const std::vector<int> genders = group_values(test, "gender");
    const std::vector<int> races = group_values(test, "race");
    const std::size_t cells = grid.cell_count();

    std::vector<MetricsReport> rows(suite.size() * cells);
    parallel_for(suite.size(), jobs, [&](std::size_t m) {
        const SuiteEntry& entry = suite[m];
        // Economics touch neither scores nor thresholds, so one decision pass
        // and one fairness pass cover every cell of this model's block.
        const DecisionSet decisions = decide(entry.policy, entry.model, test);
        const AttributeFairness gender_f = attribute_fairness(decisions, genders, outcomes);
        const AttributeFairness race_f = attribute_fairness(decisions, races, outcomes);
        const double consistency = individual_consistency(entry.model, test);
        for (std::size_t ri = 0; ri < grid.interest_rates.size(); ++ri) {
            for (std::size_t di = 0; di < grid.default_loss_rates.size(); ++di) {
                MetricsReport& report =
                    rows[m * cells + ri * grid.default_loss_rates.size() + di];
                report.model = entry.name;
                report.policy = entry.policy.provenance;
                report.labels = labels;
                report.econ = grid.cell(ri, di);
                report.profit = compute_profit(decisions, outcomes, report.econ);
                report.gender = gender_f;
                report.race = race_f;
                report.consistency = consistency;
            }
        }
    });
    return rows;
}

ThresholdCurve threshold_sweep(const TrainedModel& model, const Population& test,
                               const EconomicParams& econ, double step, LabelSource labels,
                               int jobs) {
    econ.validate();
    if (!(step > 0.0 && step <= 0.5)) {
        throw ConfigError("threshold sweep step must lie in (0, 0.5]");
    }
    if (test.records.empty()) throw DataError("threshold sweep needs a non-empty test split");

    std::vector<double> thresholds;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * step;
        if (t >= 1.0 - 1e-12) break;
        thresholds.push_back(t);
    }
    thresholds.push_back(1.0);

    const std::vector<double> scores = score_all(model, test);
    std::vector<std::size_t> ids;
    ids.reserve(test.size());
    for (const auto& rec : test.records) ids.push_back(rec.id);
    const std::vector<int> outcomes = label_vector(test, labels);
    const std::vector<int> genders = group_values(test, "gender");
    const std::vector<int> races = group_values(test, "race");

    ThresholdCurve curve;
    curve.points.resize(thresholds.size());
    parallel_for(thresholds.size(), jobs, [&](std::size_t i) {
        const DecisionPolicy policy = DecisionPolicy::uniform(thresholds[i], "manual");
        const DecisionSet decisions = decide(policy, ids, scores, {});
        const ProfitReport profit = compute_profit(decisions, outcomes, econ);
        ThresholdPoint& p = curve.points[i];
        p.threshold = thresholds[i];
        p.net_profit = profit.net_profit;
        p.roi = profit.roi;
        p.approval_rate = profit.approval_rate;
        p.default_rate = profit.default_rate;
        p.dp_gender = demographic_parity_diff(decisions, genders);
        p.dp_race = demographic_parity_diff(decisions, races);
    });
    return curve;
}

OptimalThreshold find_optimal_threshold(const ThresholdCurve& curve, const WeightSpec& weights) {
    weights.validate();
    if (curve.points.empty()) throw DataError("optimal threshold needs a non-empty curve");

    NormalizationContext ctx;
    ctx.min_profit = ctx.max_profit = curve.points.front().net_profit;
    const auto gap_of = [](const ThresholdPoint& p) { return 0.5 * (p.dp_gender + p.dp_race); };
    ctx.min_gap = ctx.max_gap = gap_of(curve.points.front());
    for (const auto& p : curve.points) {
        ctx.min_profit = std::min(ctx.min_profit, p.net_profit);
        ctx.max_profit = std::max(ctx.max_profit, p.net_profit);
        ctx.min_gap = std::min(ctx.min_gap, gap_of(p));
        ctx.max_gap = std::max(ctx.max_gap, gap_of(p));
    }

    OptimalThreshold best{curve.points.front().threshold,
                          efficiency_score(curve.points.front().net_profit,
                                           gap_of(curve.points.front()), ctx, weights)};
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        const double score = efficiency_score(p.net_profit, gap_of(p), ctx, weights);
        // Strict improvement only: ties keep the earlier (lower) threshold.
        if (score > best.score) best = {p.threshold, score};
    }
    return best;
}

std::vector<WeightSpec> default_weight_specs() {
    return {WeightSpec{0.3}, WeightSpec{0.5}, WeightSpec{0.7}, WeightSpec{0.9}};
}

std::vector<EfficiencyRow> efficiency_frontier(std::span<const MetricsReport> suite_reports,
                                               std::span<const WeightSpec> weight_list) {
    if (suite_reports.size() < 2) {
        throw DataError("efficiency frontier needs at least two models to normalize over");
    }
    if (weight_list.empty()) throw DataError("efficiency frontier needs at least one weight");
    const NormalizationContext ctx = normalization_context(suite_reports);

    std::vector<EfficiencyRow> rows;
    rows.reserve(suite_reports.size() * weight_list.size());
    for (const auto& w : weight_list) {
        w.validate();
        const std::size_t first = rows.size();
        std::size_t best = first;
        for (const auto& report : suite_reports) {
            EfficiencyRow row;
            row.profit_weight = w.profit_weight;
            row.model = report.model;
            row.score =
                efficiency_score(report.profit.net_profit, mean_dp_gap(report), ctx, w);
            rows.push_back(row);
            if (rows.back().score > rows[best].score) best = rows.size() - 1;
        }
        rows[best].is_best = true;
    }
    return rows;
}

FeatureImpactReport feature_fairness_impact(const Population& train, const Population& test,
                                            const TrainHyperparams& hp,
                                            const FeatureSchema& base_schema,
                                            LabelSource labels, int jobs) {
    base_schema.validate();
    if (base_schema.size() < 2) {
        throw ConfigError("feature impact analysis needs a base schema with >= 2 features");
    }
    if (test.records.empty()) throw DataError("feature impact needs a non-empty test split");

    const std::vector<int> genders = group_values(test, "gender");
    const std::vector<int> races = group_values(test, "race");
    const DecisionPolicy at_half = DecisionPolicy::uniform(0.5, "manual");

    const auto gaps_for = [&](const FeatureSchema& schema) {
        const TrainedModel model = train_logistic(train, schema, labels, hp);
        const DecisionSet decisions = decide(at_half, model, test);
        return std::pair<double, double>{demographic_parity_diff(decisions, genders),
                                         demographic_parity_diff(decisions, races)};
    };

    FeatureImpactReport report;
    report.base_schema = base_schema;
    std::tie(report.base_dp_gender, report.base_dp_race) = gaps_for(base_schema);

    std::vector<std::string> candidates;
    for (const auto& name : base_schema.feature_names) {
        if (!is_protected_feature(name)) candidates.push_back(name);
    }
    report.impacts.resize(candidates.size());
    parallel_for(candidates.size(), jobs, [&](std::size_t i) {
        const auto [dp_gender, dp_race] = gaps_for(base_schema.without(candidates[i]));
        report.impacts[i] = {candidates[i], dp_gender - report.base_dp_gender,
                             dp_race - report.base_dp_race};
    });
    return report;
}

}  // namespace fairlend
