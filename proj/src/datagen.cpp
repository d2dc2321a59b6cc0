#include "fairlend/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairlend/errors.hpp"
#include "fairlend/rng.hpp"

namespace fairlend {

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

double sigmoid_of(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_fraction(double v, const char* field) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError(std::string(field) + " must be in [0,1]");
    }
}

void check_positive(double v, const char* field) {
    if (!(v > 0.0)) {
        throw ConfigError(std::string(field) + " must be positive");
    }
}

}  // namespace

const char* cell_name(int cell) {
    static const char* names[4] = {"Male_GroupA", "Female_GroupA", "Male_GroupB",
                                   "Female_GroupB"};
    return names[cell];
}

const char* gender_name(Gender g) { return g == Gender::Male ? "Male" : "Female"; }

const char* race_name(Race r) { return r == Race::GroupA ? "GroupA" : "GroupB"; }

const char* role_name(PopulationRole role) {
    switch (role) {
        case PopulationRole::Full: return "full";
        case PopulationRole::Train: return "train";
        default: return "test";
    }
}

const std::vector<std::string>& all_feature_names() {
    static const std::vector<std::string> names = {
        "gender", "race",         "age",             "income",
        "education_years", "credit_score", "employment_years", "zipcode"};
    return names;
}

bool is_known_feature(const std::string& name) {
    const auto& names = all_feature_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

bool is_protected_feature(const std::string& name) {
    return name == "gender" || name == "race";
}

double feature_value(const ApplicantRecord& rec, const std::string& name) {
    if (name == "gender") return static_cast<double>(rec.gender);
    if (name == "race") return static_cast<double>(rec.race);
    if (name == "age") return rec.age;
    if (name == "income") return rec.income;
    if (name == "education_years") return rec.education_years;
    if (name == "credit_score") return rec.credit_score;
    if (name == "employment_years") return rec.employment_years;
    if (name == "zipcode") return static_cast<double>(rec.zipcode);
    throw ConfigError("unknown feature: " + name);
}

void GenConfig::validate() const {
    if (n_applicants < 1) throw ConfigError("n_applicants must be >= 1");
    check_fraction(female_fraction, "female_fraction");
    check_fraction(group_b_fraction, "group_b_fraction");
    for (int c = 0; c < 4; ++c) {
        if (!(income_mean_by_group.at_index(c) > 0.0)) {
            throw ConfigError(std::string("income_mean_by_group.") + cell_name(c) +
                              " must be positive");
        }
        if (!(education_mean_by_group.at_index(c) >= 0.0)) {
            throw ConfigError(std::string("education_mean_by_group.") + cell_name(c) +
                              " must be nonnegative");
        }
        const double pen = historical_bias_penalty.at_index(c);
        if (!(pen >= 0.0 && pen <= 1.0)) {
            throw ConfigError(std::string("historical_bias_penalty.") + cell_name(c) +
                              " must be in [0,1]");
        }
    }
    if (historical_bias_penalty.male_a != 0.0) {
        throw ConfigError("historical_bias_penalty.Male_GroupA must be 0");
    }
    check_positive(income_sigma, "income_sigma");
    check_positive(credit_sigma, "credit_sigma");
    check_positive(education_sigma, "education_sigma");
    check_positive(employment_mean, "employment_mean");
    if (!(age_range[0] <= age_range[1])) {
        throw ConfigError("age_range must satisfy min <= max");
    }
    if (zipcode_count < 1) throw ConfigError("zipcode_count must be >= 1");
    check_fraction(zipcode_race_correlation, "zipcode_race_correlation");
    if (true_label_coefficients.empty()) {
        throw ConfigError("true_label_coefficients must not be empty");
    }
    for (const auto& [name, coeff] : true_label_coefficients) {
        if (is_protected_feature(name)) {
            throw ConfigError("true_label_coefficients must not contain protected attribute: " +
                              name);
        }
        if (!is_known_feature(name)) {
            throw ConfigError("true_label_coefficients contains unknown feature: " + name);
        }
        if (!std::isfinite(coeff)) {
            throw ConfigError("true_label_coefficients." + name + " must be finite");
        }
    }
    if (!std::isfinite(true_label_intercept)) {
        throw ConfigError("true_label_intercept must be finite");
    }
}

double LabelModel::repay_probability(const ApplicantRecord& rec) const {
    double z = intercept;
    for (const auto& [name, coeff] : coefficients) {
        const double mu = feature_means.at(name);
        const double sd = feature_stds.at(name);
        z += coeff * (feature_value(rec, name) - mu) / sd;
    }
    return sigmoid_of(z);
}

Population generate_population(const GenConfig& config) {
    config.validate();

    const std::size_t n = config.n_applicants;
    Population pop;
    pop.gen_config = config;
    pop.role = PopulationRole::Full;
    pop.records.resize(n);

    Rng rng(config.seed);

    // Zipcodes split into a GroupA-leaning low half and a GroupB-leaning high
    // half; the correlation knob mixes group-specific and uniform draws.
    const std::size_t zip_half = (config.zipcode_count + 1) / 2;
    const bool zip_split_usable = zip_half < config.zipcode_count;

    for (std::size_t i = 0; i < n; ++i) {
        ApplicantRecord& rec = pop.records[i];
        rec.id = i;
        rec.gender = rng.bernoulli(config.female_fraction) ? Gender::Female : Gender::Male;
        rec.race = rng.bernoulli(config.group_b_fraction) ? Race::GroupB : Race::GroupA;
        rec.age = rng.uniform(config.age_range[0], config.age_range[1]);

        const double mean_income = config.income_mean_by_group.at(rec.gender, rec.race);
        const double log_mu = std::log(mean_income) - 0.5 * config.income_sigma * config.income_sigma;
        rec.income = rng.lognormal(log_mu, config.income_sigma);

        rec.education_years = std::max(
            0.0, rng.normal(config.education_mean_by_group.at(rec.gender, rec.race),
                            config.education_sigma));

        const double credit_mean = config.credit_mean +
            (rec.race == Race::GroupB ? config.credit_mean_shift_group_b : 0.0);
        rec.credit_score = std::clamp(rng.normal(credit_mean, config.credit_sigma), 300.0, 850.0);

        rec.employment_years = rng.exponential(config.employment_mean);

        const bool from_group_half =
            rng.bernoulli(config.zipcode_race_correlation) && zip_split_usable;
        if (from_group_half) {
            if (rec.race == Race::GroupA) {
                rec.zipcode = rng.uniform_index(zip_half);
            } else {
                rec.zipcode = zip_half + rng.uniform_index(config.zipcode_count - zip_half);
            }
        } else {
            rec.zipcode = rng.uniform_index(config.zipcode_count);
        }
    }

    // Generation-time standardization statistics for the creditworthiness
    // model, frozen into the population for later recomputation.
    LabelModel label_model;
    label_model.coefficients = config.true_label_coefficients;
    label_model.intercept = config.true_label_intercept;
    for (const auto& [name, coeff] : config.true_label_coefficients) {
        double sum = 0.0;
        for (const auto& rec : pop.records) sum += feature_value(rec, name);
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (const auto& rec : pop.records) {
            const double d = feature_value(rec, name) - mean;
            sq += d * d;
        }
        double sd = std::sqrt(sq / static_cast<double>(n));
        if (!(sd > 0.0)) sd = 1.0;
        label_model.feature_means[name] = mean;
        label_model.feature_stds[name] = sd;
    }
    pop.label_model = label_model;

    for (auto& rec : pop.records) {
        rec.true_repay_prob = label_model.repay_probability(rec);
        const double penalty = config.historical_bias_penalty.at(rec.gender, rec.race);
        const double observed_prob = clamp01(rec.true_repay_prob - penalty);
        rec.true_repaid = rng.bernoulli(rec.true_repay_prob) ? 1 : 0;
        rec.observed_repaid = rng.bernoulli(observed_prob) ? 1 : 0;
    }

    return pop;
}

std::pair<Population, Population> split_population(const Population& pop,
                                                   double train_fraction,
                                                   std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must be in (0,1)");
    }
    const std::size_t n = pop.size();
    if (n == 0) throw DataError("cannot split an empty population");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates with a pinned engine; std::shuffle is not portable.
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const std::size_t j = rng.uniform_index(i + 1);
        std::swap(order[i], order[j]);
    }

    const auto train_size =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));

    std::vector<std::size_t> train_idx(order.begin(), order.begin() + train_size);
    std::vector<std::size_t> test_idx(order.begin() + train_size, order.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    auto take = [&pop](const std::vector<std::size_t>& idx, PopulationRole role) {
        Population part;
        part.gen_config = pop.gen_config;
        part.label_model = pop.label_model;
        part.role = role;
        part.records.reserve(idx.size());
        for (std::size_t i : idx) part.records.push_back(pop.records[i]);
        return part;
    };
    return {take(train_idx, PopulationRole::Train), take(test_idx, PopulationRole::Test)};
}

GroupSummary summarize_groups(const Population& pop) {
    if (pop.empty()) throw DataError("cannot summarize an empty population");
    std::array<std::size_t, 4> count{};
    std::array<double, 4> prob_sum{};
    std::array<std::size_t, 4> true_sum{};
    std::array<std::size_t, 4> obs_sum{};
    for (const auto& rec : pop.records) {
        const int c = cell_index(rec.gender, rec.race);
        ++count[c];
        prob_sum[c] += rec.true_repay_prob;
        true_sum[c] += static_cast<std::size_t>(rec.true_repaid);
        obs_sum[c] += static_cast<std::size_t>(rec.observed_repaid);
    }
    GroupSummary summary;
    for (int c = 0; c < 4; ++c) {
        if (count[c] == 0) continue;
        const auto denom = static_cast<double>(count[c]);
        summary.cells[c] = CellStats{
            count[c],
            prob_sum[c] / denom,
            static_cast<double>(true_sum[c]) / denom,
            static_cast<double>(obs_sum[c]) / denom,
        };
    }
    return summary;
}

}  // namespace fairlend
