#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fairlend/datagen.hpp"

namespace fairlend {

enum class LabelSource { Observed, True };
const char* label_source_name(LabelSource source);
LabelSource label_source_from_name(const std::string& name);

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

int label_of(const ApplicantRecord& rec, LabelSource source);

// Ordered feature list; order is fixed and persisted with the model.
struct FeatureSchema {
    std::vector<std::string> feature_names;

    static FeatureSchema full();     // all eight features, protected included
    static FeatureSchema unaware();  // full minus gender and race

    bool contains(const std::string& name) const;
    FeatureSchema without(const std::string& name) const;
    std::size_t size() const { return feature_names.size(); }

    // Throws ConfigError on duplicates, unknown names, or an empty list.
    void validate() const;
};

// Per-feature location/scale learned from training data. Zero-variance
// columns store deviation 1 so they contribute only through the intercept.
struct Standardizer {
    std::vector<double> means;
    std::vector<double> stds;

    static Standardizer fit(const Population& pop, const FeatureSchema& schema);
};

struct TrainHyperparams {
    double learning_rate = 0.1;
    std::size_t max_iterations = 5000;
    double l2_penalty = 1e-3;
    double convergence_tolerance = 1e-6;  // max absolute gradient component

    void validate() const;
};

struct TrainingMetadata {
    std::size_t iterations = 0;
    double final_loss = 0.0;
};

struct TrainedModel {
    FeatureSchema schema;
    Standardizer standardizer;
    std::vector<double> weights;
    double intercept = 0.0;
    LabelSource label_source = LabelSource::Observed;
    TrainHyperparams hyperparams;
    TrainingMetadata training;

    // sigmoid(w . standardized(x) + b), always in (0,1).
    double score(const ApplicantRecord& rec) const;
};

std::vector<double> score_all(const TrainedModel& model, const Population& pop);

// L2-regularized logistic regression via full-batch gradient descent with
// zero initialization. Deterministic; stops at max_iterations or when every
// gradient component is within hyperparams.convergence_tolerance.
TrainedModel train_logistic(const Population& train, const FeatureSchema& schema,
                            LabelSource labels, const TrainHyperparams& hp);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> weight_grad;
    double intercept_grad = 0.0;
};

// Regularized mean log loss and its exact gradient at the given parameters,
// over the standardized design matrix fit on `train`. Convention:
// loss = mean log loss + (l2 / (2n)) * sum(w^2), intercept unpenalized.
LossGrad loss_and_gradient(std::span<const double> weights, double intercept,
                           const Population& train, const FeatureSchema& schema,
                           LabelSource labels, double l2_penalty);

// Fraction of records where (score >= threshold) matches the selected label.
double accuracy(const TrainedModel& model, const Population& pop, double threshold,
                LabelSource labels);

}  // namespace fairlend
