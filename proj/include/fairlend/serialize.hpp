#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairlend/datagen.hpp"
#include "fairlend/experiments.hpp"
#include "fairlend/longterm.hpp"
#include "fairlend/metrics.hpp"
#include "fairlend/model.hpp"
#include "fairlend/policy.hpp"

namespace fairlend {

// Fixed six-decimal rendering used by the CSV writers; infinities render as
// "inf"/"-inf".
std::string format_fixed6(double v);

// Shortest decimal form that parses back to the identical double; used where
// a file must round-trip exactly (trace tables).
std::string format_roundtrip(double v);

// --- population -------------------------------------------------------------

inline constexpr const char* kPopulationCsvHeader =
    "id,gender,race,age,income,education_years,credit_score,employment_years,"
    "zipcode,true_repay_prob,true_repaid,observed_repaid";

void write_population_csv(const Population& pop, std::ostream& out);
void write_population_csv(const Population& pop, const std::filesystem::path& path);

// Strict reader: exact header, 12 fields per row, M/F and A/B codes. The
// result carries no generator recipe (role Full, empty label model).
Population read_population_csv(std::istream& in);
Population read_population_csv(const std::filesystem::path& path);

// --- model / policy ----------------------------------------------------------

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

nlohmann::json policy_to_json(const DecisionPolicy& policy);
DecisionPolicy policy_from_json(const nlohmann::json& j);

// --- metrics -----------------------------------------------------------------

inline constexpr const char* kMetricsCsvHeader =
    "model,policy,labels,r,d,L,net_profit,roi,approval_rate,default_rate,"
    "dp_gender,dp_race,eo_gender,eo_race,di_gender,di_race,ff_gender,ff_race,"
    "consistency";

std::string metrics_csv_row(const MetricsReport& report);
void write_metrics_csv(std::span<const MetricsReport> reports, std::ostream& out);
nlohmann::json metrics_to_json(const MetricsReport& report);  // flat object

// --- experiment tables -------------------------------------------------------

inline constexpr const char* kThresholdCurveCsvHeader =
    "threshold,net_profit,roi,approval_rate,default_rate,dp_gender,dp_race";

void write_threshold_curve_csv(const ThresholdCurve& curve, std::ostream& out);

inline constexpr const char* kEfficiencyCsvHeader = "profit_weight,model,score,is_best";

void write_efficiency_csv(std::span<const EfficiencyRow> rows, std::ostream& out);

inline constexpr const char* kFeatureImpactCsvHeader =
    "feature,delta_dp_gender,delta_dp_race";

void write_feature_impact_csv(const FeatureImpactReport& report, std::ostream& out);

// --- simulation traces --------------------------------------------------------

inline constexpr const char* kTraceCsvHeader = "cycle,attribute,group,metric,value";

void write_trace_csv(std::span<const TraceRow> rows, std::ostream& out);
std::vector<TraceRow> read_trace_csv(std::istream& in);

}  // namespace fairlend
