#pragma once

#include <span>
#include <string>
#include <vector>

#include "fairlend/metrics.hpp"
#include "fairlend/model.hpp"
#include "fairlend/policy.hpp"

namespace fairlend {

// Cartesian grid of economic conditions swept by the scenario analysis.
struct ScenarioGrid {
    std::vector<double> interest_rates{0.05, 0.10, 0.15, 0.20};
    std::vector<double> default_loss_rates{0.50, 0.70, 0.90};
    double loan_amount = 10000.0;

    void validate() const;  // throws ConfigError
    std::size_t cell_count() const {
        return interest_rates.size() * default_loss_rates.size();
    }
    EconomicParams cell(std::size_t rate_idx, std::size_t loss_idx) const;
};

// One MetricsReport per suite entry, evaluated on the test split under econ.
std::vector<MetricsReport> run_model_suite(const PolicySuite& suite, const Population& test,
                                           const EconomicParams& econ, LabelSource labels);

// Convenience wrapper that builds the seven-entry suite first.
std::vector<MetricsReport> run_model_suite(const Population& train, const Population& test,
                                           const EconomicParams& econ,
                                           const TrainHyperparams& hp,
                                           LabelSource labels = LabelSource::True);

// |suite| x |rates| x |loss rates| reports ordered by (suite entry, rate,
// loss rate). Decisions and fairness metrics are computed once per model and
// reused across cells — economics never alter decisions.
std::vector<MetricsReport> economic_sweep(const PolicySuite& suite, const Population& test,
                                          const ScenarioGrid& grid, LabelSource labels,
                                          int jobs = 1);

struct ThresholdPoint {
    double threshold = 0.0;
    double net_profit = 0.0;
    double roi = 0.0;
    double approval_rate = 0.0;
    double default_rate = 0.0;
    double dp_gender = 0.0;
    double dp_race = 0.0;
};

// Metrics along a grid of uniform thresholds; thresholds strictly increase
// from 0 to exactly 1.
struct ThresholdCurve {
    std::vector<ThresholdPoint> points;
};

// Evaluates uniform thresholds {0, step, 2*step, ...} closed with exactly 1.0.
// Requires 0 < step <= 0.5; the default step 0.01 yields 101 points.
ThresholdCurve threshold_sweep(const TrainedModel& model, const Population& test,
                               const EconomicParams& econ, double step,
                               LabelSource labels = LabelSource::True, int jobs = 1);

inline constexpr double kDefaultThresholdStep = 0.01;

struct OptimalThreshold {
    double threshold = 0.0;
    double score = 0.0;
};

// Argmax of efficiency_score over curve points, normalized across the whole
// curve with the mean DP gap as the fairness axis. Ties break toward the
// lower threshold (more credit access).
OptimalThreshold find_optimal_threshold(const ThresholdCurve& curve, const WeightSpec& weights);

struct EfficiencyRow {
    double profit_weight = 0.0;
    std::string model;
    double score = 0.0;
    bool is_best = false;  // highest score at this weight
};

// The profit/fairness weightings reported by the efficiency analysis.
std::vector<WeightSpec> default_weight_specs();  // 0.3, 0.5, 0.7, 0.9

// Efficiency score per (weight, model) with suite-wide normalization, rows
// ordered weight-major in input order. Needs at least two reports.
std::vector<EfficiencyRow> efficiency_frontier(std::span<const MetricsReport> suite_reports,
                                               std::span<const WeightSpec> weight_list);

struct FeatureImpact {
    std::string feature;
    double delta_dp_gender = 0.0;  // gap without the feature minus base gap
    double delta_dp_race = 0.0;    // negative delta: the feature widens the gap
};

struct FeatureImpactReport {
    FeatureSchema base_schema;
    double base_dp_gender = 0.0;
    double base_dp_race = 0.0;
    std::vector<FeatureImpact> impacts;  // one per non-protected base feature
};

// Leave-one-feature-out retraining: for every non-protected feature in
// base_schema, retrain without it and report how the test-split DP gaps move
// relative to the base model (uniform 0.5 decisions). The protected-attribute
// columns, when present in base_schema, stay in every retrained schema.
FeatureImpactReport feature_fairness_impact(const Population& train, const Population& test,
                                            const TrainHyperparams& hp,
                                            const FeatureSchema& base_schema,
                                            LabelSource labels = LabelSource::Observed,
                                            int jobs = 1);

}  // namespace fairlend
