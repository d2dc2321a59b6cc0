#include "fairlend/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fairlend/errors.hpp"

namespace fairlend {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

struct DesignMatrix {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<double> values;  // row-major, standardized
    std::vector<int> labels;

    double at(std::size_t row, std::size_t col) const { return values[row * k + col]; }
};

DesignMatrix build_design(const Population& pop, const FeatureSchema& schema,
                          const Standardizer& std_, LabelSource labels) {
    DesignMatrix design;
    design.n = pop.size();
    design.k = schema.size();
    design.values.resize(design.n * design.k);
    design.labels.resize(design.n);
    for (std::size_t i = 0; i < design.n; ++i) {
        const auto& rec = pop.records[i];
        for (std::size_t j = 0; j < design.k; ++j) {
            design.values[i * design.k + j] =
                (feature_value(rec, schema.feature_names[j]) - std_.means[j]) / std_.stds[j];
        }
        design.labels[i] = label_of(rec, labels);
    }
    return design;
}

LossGrad loss_and_gradient_core(std::span<const double> weights, double intercept,
                                const DesignMatrix& design, double l2_penalty) {
    const std::size_t n = design.n;
    const std::size_t k = design.k;
    LossGrad out;
    out.weight_grad.assign(k, 0.0);
    double loss = 0.0;
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = design.values.data() + i * k;
        double z = intercept;
        for (std::size_t j = 0; j < k; ++j) z += weights[j] * row[j];
        const double y = design.labels[i];
        loss += softplus(z) - y * z;
        const double residual = sigmoid(z) - y;
        for (std::size_t j = 0; j < k; ++j) out.weight_grad[j] += residual * row[j];
        grad_b += residual;
    }
    const auto nd = static_cast<double>(n);
    loss /= nd;
    for (std::size_t j = 0; j < k; ++j) {
        loss += (l2_penalty / (2.0 * nd)) * weights[j] * weights[j];
        out.weight_grad[j] = out.weight_grad[j] / nd + (l2_penalty / nd) * weights[j];
    }
    out.loss = loss;
    out.intercept_grad = grad_b / nd;
    return out;
}

}  // namespace

const char* label_source_name(LabelSource source) {
    return source == LabelSource::Observed ? "observed" : "true";
}

LabelSource label_source_from_name(const std::string& name) {
    if (name == "observed") return LabelSource::Observed;
    if (name == "true") return LabelSource::True;
    throw ConfigError("label source must be \"true\" or \"observed\", got \"" + name + "\"");
}

int label_of(const ApplicantRecord& rec, LabelSource source) {
    return source == LabelSource::Observed ? rec.observed_repaid : rec.true_repaid;
}

FeatureSchema FeatureSchema::full() { return FeatureSchema{all_feature_names()}; }

FeatureSchema FeatureSchema::unaware() {
    FeatureSchema schema;
    for (const auto& name : all_feature_names()) {
        if (!is_protected_feature(name)) schema.feature_names.push_back(name);
    }
    return schema;
}

bool FeatureSchema::contains(const std::string& name) const {
    return std::find(feature_names.begin(), feature_names.end(), name) != feature_names.end();
}

FeatureSchema FeatureSchema::without(const std::string& name) const {
    FeatureSchema schema;
    for (const auto& f : feature_names) {
        if (f != name) schema.feature_names.push_back(f);
    }
    return schema;
}

void FeatureSchema::validate() const {
    if (feature_names.empty()) throw ConfigError("feature schema must not be empty");
    std::set<std::string> seen;
    for (const auto& name : feature_names) {
        if (!is_known_feature(name)) throw ConfigError("unknown schema feature: " + name);
        if (!seen.insert(name).second) throw ConfigError("duplicate schema feature: " + name);
    }
}

Standardizer Standardizer::fit(const Population& pop, const FeatureSchema& schema) {
    if (pop.empty()) throw DataError("cannot fit standardizer on an empty population");
    const std::size_t k = schema.size();
    const auto n = static_cast<double>(pop.size());
    Standardizer std_;
    std_.means.assign(k, 0.0);
    std_.stds.assign(k, 1.0);
    for (std::size_t j = 0; j < k; ++j) {
        double sum = 0.0;
        for (const auto& rec : pop.records) sum += feature_value(rec, schema.feature_names[j]);
        const double mean = sum / n;
        double sq = 0.0;
        for (const auto& rec : pop.records) {
            const double d = feature_value(rec, schema.feature_names[j]) - mean;
            sq += d * d;
        }
        const double sd = std::sqrt(sq / n);
        std_.means[j] = mean;
        std_.stds[j] = sd > 0.0 ? sd : 1.0;
    }
    return std_;
}

void TrainHyperparams::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(l2_penalty >= 0.0)) throw ConfigError("l2_penalty must be nonnegative");
    if (!(convergence_tolerance > 0.0)) {
        throw ConfigError("convergence_tolerance must be positive");
    }
}

double TrainedModel::score(const ApplicantRecord& rec) const {
    double z = intercept;
    for (std::size_t j = 0; j < schema.size(); ++j) {
        z += weights[j] *
             (feature_value(rec, schema.feature_names[j]) - standardizer.means[j]) /
             standardizer.stds[j];
    }
    return sigmoid(z);
}

std::vector<double> score_all(const TrainedModel& model, const Population& pop) {
    std::vector<double> scores;
    scores.reserve(pop.size());
    for (const auto& rec : pop.records) scores.push_back(model.score(rec));
    return scores;
}

TrainedModel train_logistic(const Population& train, const FeatureSchema& schema,
                            LabelSource labels, const TrainHyperparams& hp) {
    schema.validate();
    hp.validate();
    if (train.empty()) throw TrainingError("training population is empty");

    std::size_t positives = 0;
    for (const auto& rec : train.records) positives += static_cast<std::size_t>(label_of(rec, labels));
    if (positives == 0 || positives == train.size()) {
        throw TrainingError(std::string("training labels (") + label_source_name(labels) +
                            ") contain a single class");
    }

    TrainedModel model;
    model.schema = schema;
    model.standardizer = Standardizer::fit(train, schema);
    model.weights.assign(schema.size(), 0.0);
    model.intercept = 0.0;
    model.label_source = labels;
    model.hyperparams = hp;

    const DesignMatrix design = build_design(train, schema, model.standardizer, labels);

    LossGrad lg;
    std::size_t iter = 0;
    for (; iter < hp.max_iterations; ++iter) {
        lg = loss_and_gradient_core(model.weights, model.intercept, design, hp.l2_penalty);
        if (!std::isfinite(lg.loss)) {
            std::ostringstream msg;
            msg << "training diverged to a non-finite loss at iteration " << iter
                << " (learning_rate " << hp.learning_rate << ")";
            throw TrainingError(msg.str());
        }
        double max_grad = std::abs(lg.intercept_grad);
        for (double g : lg.weight_grad) max_grad = std::max(max_grad, std::abs(g));
        if (max_grad <= hp.convergence_tolerance) break;
        for (std::size_t j = 0; j < model.weights.size(); ++j) {
            model.weights[j] -= hp.learning_rate * lg.weight_grad[j];
        }
        model.intercept -= hp.learning_rate * lg.intercept_grad;
    }

    lg = loss_and_gradient_core(model.weights, model.intercept, design, hp.l2_penalty);
    if (!std::isfinite(lg.loss)) {
        std::ostringstream msg;
        msg << "training diverged to a non-finite loss (learning_rate " << hp.learning_rate
            << ")";
        throw TrainingError(msg.str());
    }
    model.training.iterations = iter;
    model.training.final_loss = lg.loss;
    return model;
}

LossGrad loss_and_gradient(std::span<const double> weights, double intercept,
                           const Population& train, const FeatureSchema& schema,
                           LabelSource labels, double l2_penalty) {
    schema.validate();
    if (train.empty()) throw TrainingError("training population is empty");
    if (weights.size() != schema.size()) {
        throw TrainingError("weight count does not match schema length");
    }
    const Standardizer std_ = Standardizer::fit(train, schema);
    const DesignMatrix design = build_design(train, schema, std_, labels);
    return loss_and_gradient_core(weights, intercept, design, l2_penalty);
}

double accuracy(const TrainedModel& model, const Population& pop, double threshold,
                LabelSource labels) {
    if (pop.empty()) throw DataError("cannot compute accuracy on an empty population");
    std::size_t correct = 0;
    for (const auto& rec : pop.records) {
        const int predicted = model.score(rec) >= threshold ? 1 : 0;
        if (predicted == label_of(rec, labels)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(pop.size());
}

}  // namespace fairlend
