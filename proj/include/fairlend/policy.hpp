#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairlend/datagen.hpp"
#include "fairlend/model.hpp"

namespace fairlend {

// Threshold strictly above any attainable score; a per-group threshold set to
// this value approves nobody in that group. Calibration may legitimately land
// here, so policy validation accepts it even though it sits one ulp above 1.
double never_approve_threshold();

enum class PolicyKind { Uniform, PerGroup };

std::string policy_kind_name(PolicyKind kind);
PolicyKind policy_kind_from_name(const std::string& name);

// Approval rule: uniform threshold for everyone, or one threshold per group of
// a single protected attribute ("gender" or "race"). Groups are indexed by
// their enum value (Male/GroupA = 0, Female/GroupB = 1).
struct DecisionPolicy {
    PolicyKind kind = PolicyKind::Uniform;
    std::string attribute;  // "gender" or "race"; meaningful only for PerGroup
    double uniform_threshold = 0.5;
    std::array<double, 2> group_thresholds{0.5, 0.5};
    // one of: baseline, unawareness, demographic_parity, equal_opportunity,
    // counterfactual, manual
    std::string provenance = "manual";

    void validate() const;  // throws ConfigError
    double threshold_for(int group) const;

    static DecisionPolicy uniform(double threshold, std::string provenance);
    static DecisionPolicy per_group(std::string attribute, std::array<double, 2> thresholds,
                                    std::string provenance);
};

struct Decision {
    std::size_t id = 0;
    double score = 0.0;
    bool approved = false;
};

struct DecisionSet {
    std::vector<Decision> decisions;  // input order preserved
    std::string policy_provenance;
    std::string model_provenance;

    std::size_t size() const { return decisions.size(); }
    std::size_t approved_count() const;
    double approval_rate() const;  // 0 when empty
};

// Extracts the 0/1 group value of `attribute` for every record, in order.
std::vector<int> group_values(const Population& pop, const std::string& attribute);

// Applies the tie rule score >= threshold. `groups` may be empty for a uniform
// policy; a per-group policy requires one group label per score.
DecisionSet decide(const DecisionPolicy& policy, std::span<const std::size_t> ids,
                   std::span<const double> scores, std::span<const int> groups,
                   std::string model_provenance = "");

// Scores the population with the model, pulls group labels as the policy
// demands, and decides. Records keep population order.
DecisionSet decide(const DecisionPolicy& policy, const TrainedModel& model,
                   const Population& pop);

// Picks, for each group, the candidate threshold (midpoints between adjacent
// distinct sorted scores, plus 0 and never_approve_threshold()) whose group
// approval rate lands closest to reference_rate; ties go to the higher
// threshold. The inter-group rate gap stays within `tolerance` whenever both
// groups hold at least 1/tolerance members with distinct scores.
DecisionPolicy calibrate_demographic_parity(std::span<const double> scores,
                                            std::span<const int> groups, double reference_rate,
                                            double tolerance, const std::string& attribute);

// Same candidate search, matching each group's true positive rate (approved
// positives / positives) to reference_tpr. Every group needs at least one
// positive-label member.
DecisionPolicy calibrate_equal_opportunity(std::span<const double> scores,
                                           std::span<const int> groups,
                                           std::span<const int> positive_labels,
                                           double reference_tpr, double tolerance,
                                           const std::string& attribute);

struct SuiteEntry {
    std::string name;
    TrainedModel model;
    DecisionPolicy policy;
};

// Row order follows the comparison table the suite reproduces.
using PolicySuite = std::vector<SuiteEntry>;

inline constexpr double kDpCalibrationTolerance = 0.01;
inline constexpr double kEoCalibrationTolerance = 0.02;

// The seven standard model/policy pairs: baseline, per-group threshold
// variants calibrated on the training split against the baseline's overall
// approval rate (demographic parity) or true positive rate (equal
// opportunity), the masked-schema model, and the model trained on true labels.
PolicySuite build_policy_suite(const Population& train, const Population& test,
                               const TrainHyperparams& hp);

inline constexpr const char* kSuiteBaseline = "Baseline";
inline constexpr const char* kSuiteDpGender = "Demo. Parity (Gender)";
inline constexpr const char* kSuiteDpRace = "Demo. Parity (Race)";
inline constexpr const char* kSuiteEoGender = "Equal Opp. (Gender)";
inline constexpr const char* kSuiteEoRace = "Equal Opp. (Race)";
inline constexpr const char* kSuiteUnawareness = "Fairness through Unawareness";
inline constexpr const char* kSuiteCounterfactual = "Trained on Unbiased Labels";

const SuiteEntry& suite_entry(const PolicySuite& suite, const std::string& name);

}  // namespace fairlend
