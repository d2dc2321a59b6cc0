#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fairlend {

enum class Gender : int { Male = 0, Female = 1 };
enum class Race : int { GroupA = 0, GroupB = 1 };

// Cell index layout: Male/GroupA, Female/GroupA, Male/GroupB, Female/GroupB.
inline int cell_index(Gender g, Race r) {
    return static_cast<int>(g) + 2 * static_cast<int>(r);
}
const char* cell_name(int cell);
const char* gender_name(Gender g);
const char* race_name(Race r);

// One value per (gender, race) cell.
struct CellValues {
    double male_a = 0.0;
    double female_a = 0.0;
    double male_b = 0.0;
    double female_b = 0.0;

    double at(Gender g, Race r) const {
        switch (cell_index(g, r)) {
            case 0: return male_a;
            case 1: return female_a;
            case 2: return male_b;
            default: return female_b;
        }
    }
    double& at_index(int cell) {
        switch (cell) {
            case 0: return male_a;
            case 1: return female_a;
            case 2: return male_b;
            default: return female_b;
        }
    }
    double at_index(int cell) const {
        return const_cast<CellValues*>(this)->at_index(cell);
    }
};

// Synthetic population recipe. Defaults produce a population with structural
// group gaps in income/education/credit, label bias against Female and
// Group B cells, and an overall true repayment rate close to 0.80.
struct GenConfig {
    std::size_t n_applicants = 10000;
    std::uint64_t seed = 42;
    double female_fraction = 0.5;
    double group_b_fraction = 0.4;

    // Income is lognormal; per-cell arithmetic means, log-scale spread.
    CellValues income_mean_by_group{60000.0, 45000.0, 42000.0, 31500.0};
    double income_sigma = 0.5;

    double credit_mean = 680.0;
    double credit_sigma = 60.0;
    double credit_mean_shift_group_b = -60.0;

    CellValues education_mean_by_group{14.0, 14.0, 12.5, 12.5};
    double education_sigma = 2.0;

    double employment_mean = 6.0;
    std::array<double, 2> age_range{21.0, 70.0};

    std::size_t zipcode_count = 50;
    double zipcode_race_correlation = 0.6;

    // Creditworthiness model: sigmoid(intercept + sum coeff * standardized
    // feature). Keys must be legitimate (non-protected) features. Values are
    // half the logistic coefficients reported for these features so that the
    // approved pool stays unprofitable under the default economy; intercept
    // is tuned for a ~0.80 population true repayment rate.
    std::map<std::string, double> true_label_coefficients{
        {"credit_score", 0.742},
        {"income", 0.4745},
        {"education_years", 0.2405},
        {"employment_years", 0.145},
        {"age", -0.015},
    };
    double true_label_intercept = 1.65;

    // Probability decrement applied to the observed label per cell. Must be
    // 0 for the advantaged (Male, GroupA) cell.
    CellValues historical_bias_penalty{0.0, 0.05, 0.10, 0.15};

    // Throws ConfigError naming the offending field.
    void validate() const;
};

struct ApplicantRecord {
    std::size_t id = 0;
    Gender gender = Gender::Male;
    Race race = Race::GroupA;
    double age = 0.0;
    double income = 0.0;
    double education_years = 0.0;
    double credit_score = 0.0;  // clamped to [300, 850]
    double employment_years = 0.0;
    std::size_t zipcode = 0;
    double true_repay_prob = 0.0;
    int true_repaid = 0;
    int observed_repaid = 0;
};

// Numeric feature access by schema name. Protected attributes encode as
// Male=0/Female=1 and GroupA=0/GroupB=1; zipcode is its index.
double feature_value(const ApplicantRecord& rec, const std::string& name);
bool is_protected_feature(const std::string& name);
bool is_known_feature(const std::string& name);
const std::vector<std::string>& all_feature_names();

// The generation-time creditworthiness recipe, kept with the population so
// repayment probabilities can be recomputed after feature updates.
struct LabelModel {
    std::map<std::string, double> coefficients;
    double intercept = 0.0;
    std::map<std::string, double> feature_means;
    std::map<std::string, double> feature_stds;

    double repay_probability(const ApplicantRecord& rec) const;
};

enum class PopulationRole { Full, Train, Test };
const char* role_name(PopulationRole role);

struct Population {
    std::vector<ApplicantRecord> records;
    GenConfig gen_config;
    PopulationRole role = PopulationRole::Full;
    LabelModel label_model;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

struct CellStats {
    std::size_t count = 0;
    double mean_true_prob = 0.0;
    double true_rate = 0.0;
    double observed_rate = 0.0;
};

// Cells with no members are absent.
struct GroupSummary {
    std::array<std::optional<CellStats>, 4> cells;
};

Population generate_population(const GenConfig& config);

// Deterministic shuffle-split; train gets floor(n * train_fraction) records.
// Both halves keep original ids, sorted ascending.
std::pair<Population, Population> split_population(const Population& pop,
                                                   double train_fraction,
                                                   std::uint64_t seed);

GroupSummary summarize_groups(const Population& pop);

}  // namespace fairlend
