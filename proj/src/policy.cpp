#include "fairlend/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>

#include "fairlend/errors.hpp"

namespace fairlend {

double never_approve_threshold() { return std::nextafter(1.0, 2.0); }

std::string policy_kind_name(PolicyKind kind) {
    return kind == PolicyKind::Uniform ? "uniform" : "per_group";
}

PolicyKind policy_kind_from_name(const std::string& name) {
    if (name == "uniform") return PolicyKind::Uniform;
    if (name == "per_group") return PolicyKind::PerGroup;
    throw ConfigError("unknown policy kind: " + name);
}

namespace {

void check_threshold(double t, const std::string& label) {
    if (!(t >= 0.0 && t <= never_approve_threshold())) {
        std::ostringstream oss;
        oss << label << " threshold " << t << " outside [0, 1]";
        throw ConfigError(oss.str());
    }
}

void check_attribute(const std::string& attribute) {
    if (attribute != "gender" && attribute != "race") {
        throw ConfigError("protected attribute must be \"gender\" or \"race\", got \"" +
                          attribute + "\"");
    }
}

}  // namespace

void DecisionPolicy::validate() const {
    if (kind == PolicyKind::Uniform) {
        check_threshold(uniform_threshold, "uniform");
    } else {
        check_attribute(attribute);
        check_threshold(group_thresholds[0], attribute + "[0]");
        check_threshold(group_thresholds[1], attribute + "[1]");
    }
    static const char* kProvenances[] = {"baseline",          "unawareness",
                                         "demographic_parity", "equal_opportunity",
                                         "counterfactual",     "manual"};
    if (std::find(std::begin(kProvenances), std::end(kProvenances), provenance) ==
        std::end(kProvenances)) {
        throw ConfigError("unknown policy provenance: " + provenance);
    }
}

double DecisionPolicy::threshold_for(int group) const {
    if (kind == PolicyKind::Uniform) return uniform_threshold;
    if (group != 0 && group != 1) {
        throw DataError("group value must be 0 or 1, got " + std::to_string(group));
    }
    return group_thresholds[static_cast<std::size_t>(group)];
}

DecisionPolicy DecisionPolicy::uniform(double threshold, std::string provenance) {
    DecisionPolicy p;
    p.kind = PolicyKind::Uniform;
    p.uniform_threshold = threshold;
    p.provenance = std::move(provenance);
    p.validate();
    return p;
}

DecisionPolicy DecisionPolicy::per_group(std::string attribute, std::array<double, 2> thresholds,
                                         std::string provenance) {
    DecisionPolicy p;
    p.kind = PolicyKind::PerGroup;
    p.attribute = std::move(attribute);
    p.group_thresholds = thresholds;
    p.provenance = std::move(provenance);
    p.validate();
    return p;
}

std::size_t DecisionSet::approved_count() const {
    std::size_t n = 0;
    for (const auto& d : decisions) n += static_cast<std::size_t>(d.approved);
    return n;
}

double DecisionSet::approval_rate() const {
    if (decisions.empty()) return 0.0;
    return static_cast<double>(approved_count()) / static_cast<double>(decisions.size());
}

std::vector<int> group_values(const Population& pop, const std::string& attribute) {
    check_attribute(attribute);
    std::vector<int> out;
    out.reserve(pop.size());
    for (const auto& rec : pop.records) {
        out.push_back(attribute == "gender" ? static_cast<int>(rec.gender)
                                            : static_cast<int>(rec.race));
    }
    return out;
}

DecisionSet decide(const DecisionPolicy& policy, std::span<const std::size_t> ids,
                   std::span<const double> scores, std::span<const int> groups,
                   std::string model_provenance) {
    policy.validate();
    if (ids.size() != scores.size()) {
        throw DataError("decide: ids and scores length mismatch");
    }
    if (policy.kind == PolicyKind::PerGroup && groups.size() != scores.size()) {
        throw DataError("decide: per-group policy on " + policy.attribute +
                        " requires one group label per applicant");
    }
    DecisionSet set;
    set.decisions.reserve(scores.size());
    set.policy_provenance = policy.provenance;
    set.model_provenance = std::move(model_provenance);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double threshold = policy.kind == PolicyKind::Uniform
                                     ? policy.uniform_threshold
                                     : policy.threshold_for(groups[i]);
        set.decisions.push_back({ids[i], scores[i], scores[i] >= threshold});
    }
    return set;
}

DecisionSet decide(const DecisionPolicy& policy, const TrainedModel& model,
                   const Population& pop) {
    const std::vector<double> scores = score_all(model, pop);
    std::vector<std::size_t> ids;
    ids.reserve(pop.size());
    for (const auto& rec : pop.records) ids.push_back(rec.id);
    std::vector<int> groups;
    if (policy.kind == PolicyKind::PerGroup) groups = group_values(pop, policy.attribute);
    std::ostringstream prov;
    prov << label_source_name(model.label_source) << ":" << model.schema.feature_names.size()
         << "f";
    return decide(policy, ids, scores, groups, prov.str());
}

namespace {

// Midpoints between adjacent distinct sorted scores, plus the two sentinels
// that approve everyone (0) and nobody (just above 1). Every distinct approval
// pattern achievable on these scores is realized by some candidate.
std::vector<double> candidate_thresholds(std::vector<double> scores) {
    std::sort(scores.begin(), scores.end());
    scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
    std::vector<double> cands;
    cands.reserve(scores.size() + 1);
    cands.push_back(0.0);
    for (std::size_t i = 1; i < scores.size(); ++i) {
        cands.push_back(0.5 * (scores[i - 1] + scores[i]));
    }
    cands.push_back(never_approve_threshold());
    return cands;
}

// Rate achieved at threshold t over rate_scores (sorted ascending):
// fraction with score >= t.
double rate_at(const std::vector<double>& sorted_rate_scores, double t) {
    const auto it =
        std::lower_bound(sorted_rate_scores.begin(), sorted_rate_scores.end(), t);
    const auto n_ge = static_cast<double>(sorted_rate_scores.end() - it);
    return n_ge / static_cast<double>(sorted_rate_scores.size());
}

// Candidate whose rate over rate_scores is closest to reference; ties go to
// the higher threshold.
double closest_threshold(const std::vector<double>& candidates,
                         std::vector<double> rate_scores, double reference) {
    std::sort(rate_scores.begin(), rate_scores.end());
    double best_t = candidates.front();
    double best_dist = std::abs(rate_at(rate_scores, best_t) - reference);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double t = candidates[i];
        const double dist = std::abs(rate_at(rate_scores, t) - reference);
        if (dist < best_dist || (dist == best_dist && t > best_t)) {
            best_t = t;
            best_dist = dist;
        }
    }
    return best_t;
}

struct GroupScores {
    std::vector<double> all;       // every member's score
    std::vector<double> positive;  // scores of positive-label members only
};

std::array<GroupScores, 2> split_by_group(std::span<const double> scores,
                                          std::span<const int> groups,
                                          std::span<const int> positive_labels) {
    if (groups.size() != scores.size()) {
        throw CalibrationError("calibration requires one group label per score");
    }
    if (!positive_labels.empty() && positive_labels.size() != scores.size()) {
        throw CalibrationError("calibration requires one label per score");
    }
    std::array<GroupScores, 2> by_group;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int g = groups[i];
        if (g != 0 && g != 1) {
            throw CalibrationError("group value must be 0 or 1, got " + std::to_string(g));
        }
        auto& gs = by_group[static_cast<std::size_t>(g)];
        gs.all.push_back(scores[i]);
        if (!positive_labels.empty() && positive_labels[i] != 0) {
            gs.positive.push_back(scores[i]);
        }
    }
    return by_group;
}

void check_calibration_params(double reference, double tolerance) {
    if (!(reference >= 0.0 && reference <= 1.0)) {
        throw CalibrationError("reference rate must lie in [0, 1], got " +
                               std::to_string(reference));
    }
    if (!(tolerance > 0.0 && tolerance <= 1.0)) {
        throw CalibrationError("tolerance must lie in (0, 1], got " +
                               std::to_string(tolerance));
    }
}

}  // namespace

DecisionPolicy calibrate_demographic_parity(std::span<const double> scores,
                                            std::span<const int> groups, double reference_rate,
                                            double tolerance, const std::string& attribute) {
    check_attribute(attribute);
    check_calibration_params(reference_rate, tolerance);
    const auto by_group = split_by_group(scores, groups, {});
    std::array<double, 2> thresholds{};
    for (std::size_t g = 0; g < 2; ++g) {
        if (by_group[g].all.empty()) {
            throw CalibrationError("demographic-parity calibration on " + attribute +
                                   ": group " + std::to_string(g) + " is empty");
        }
        const auto cands = candidate_thresholds(by_group[g].all);
        thresholds[g] = closest_threshold(cands, by_group[g].all, reference_rate);
    }
    return DecisionPolicy::per_group(attribute, thresholds, "demographic_parity");
}

DecisionPolicy calibrate_equal_opportunity(std::span<const double> scores,
                                           std::span<const int> groups,
                                           std::span<const int> positive_labels,
                                           double reference_tpr, double tolerance,
                                           const std::string& attribute) {
    check_attribute(attribute);
    check_calibration_params(reference_tpr, tolerance);
    const auto by_group = split_by_group(scores, groups, positive_labels);
    std::array<double, 2> thresholds{};
    for (std::size_t g = 0; g < 2; ++g) {
        if (by_group[g].all.empty()) {
            throw CalibrationError("equal-opportunity calibration on " + attribute +
                                   ": group " + std::to_string(g) + " is empty");
        }
        if (by_group[g].positive.empty()) {
            throw CalibrationError("equal-opportunity calibration on " + attribute +
                                   ": group " + std::to_string(g) +
                                   " has no positive-label members");
        }
        const auto cands = candidate_thresholds(by_group[g].all);
        thresholds[g] = closest_threshold(cands, by_group[g].positive, reference_tpr);
    }
    return DecisionPolicy::per_group(attribute, thresholds, "equal_opportunity");
}

namespace {

void check_split(const Population& train, const Population& test) {
    if (train.records.empty() || test.records.empty()) {
        throw DataError("policy suite requires non-empty train and test splits");
    }
    if (train.role != PopulationRole::Train || test.role != PopulationRole::Test) {
        throw DataError("policy suite requires populations with Train and Test roles");
    }
}

std::vector<int> observed_labels_of(const Population& pop) {
    std::vector<int> labels;
    labels.reserve(pop.size());
    for (const auto& rec : pop.records) labels.push_back(rec.observed_repaid ? 1 : 0);
    return labels;
}

}  // namespace

PolicySuite build_policy_suite(const Population& train, const Population& test,
                               const TrainHyperparams& hp) {
    check_split(train, test);

    const FeatureSchema full = FeatureSchema::full();
    const FeatureSchema masked = FeatureSchema::unaware();

    TrainedModel baseline = train_logistic(train, full, LabelSource::Observed, hp);
    TrainedModel unaware = train_logistic(train, masked, LabelSource::Observed, hp);
    TrainedModel counterfactual = train_logistic(train, full, LabelSource::True, hp);

    const DecisionPolicy base_policy = DecisionPolicy::uniform(0.5, "baseline");

    // Calibration anchors: the baseline's own behaviour on the training split.
    const std::vector<double> train_scores = score_all(baseline, train);
    const std::vector<int> train_labels = observed_labels_of(train);
    std::size_t approved = 0, positives = 0, true_positives = 0;
    for (std::size_t i = 0; i < train_scores.size(); ++i) {
        const bool app = train_scores[i] >= base_policy.uniform_threshold;
        approved += static_cast<std::size_t>(app);
        if (train_labels[i] == 1) {
            ++positives;
            true_positives += static_cast<std::size_t>(app);
        }
    }
    const double ref_rate = static_cast<double>(approved) / static_cast<double>(train.size());
    if (positives == 0) {
        throw CalibrationError("training split has no positive observed labels");
    }
    const double ref_tpr =
        static_cast<double>(true_positives) / static_cast<double>(positives);

    const std::vector<int> genders = group_values(train, "gender");
    const std::vector<int> races = group_values(train, "race");

    PolicySuite suite;
    suite.push_back({kSuiteBaseline, baseline, base_policy});
    suite.push_back({kSuiteDpGender, baseline,
                     calibrate_demographic_parity(train_scores, genders, ref_rate,
                                                  kDpCalibrationTolerance, "gender")});
    suite.push_back({kSuiteDpRace, baseline,
                     calibrate_demographic_parity(train_scores, races, ref_rate,
                                                  kDpCalibrationTolerance, "race")});
    suite.push_back({kSuiteEoGender, baseline,
                     calibrate_equal_opportunity(train_scores, genders, train_labels, ref_tpr,
                                                 kEoCalibrationTolerance, "gender")});
    suite.push_back({kSuiteEoRace, baseline,
                     calibrate_equal_opportunity(train_scores, races, train_labels, ref_tpr,
                                                 kEoCalibrationTolerance, "race")});
    suite.push_back({kSuiteUnawareness, unaware, DecisionPolicy::uniform(0.5, "unawareness")});
    suite.push_back(
        {kSuiteCounterfactual, counterfactual, DecisionPolicy::uniform(0.5, "counterfactual")});
    return suite;
}

const SuiteEntry& suite_entry(const PolicySuite& suite, const std::string& name) {
    for (const auto& entry : suite) {
        if (entry.name == name) return entry;
    }
    throw DataError("no suite entry named \"" + name + "\"");
}

}  // namespace fairlend
