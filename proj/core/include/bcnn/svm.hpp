#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bcnn {

struct AssembledFeatures {
    std::vector<double> vector;
    std::string source; // pair id, or pair id + eye suffix
    int label = 0;
};

struct SvmTrainConfig {
    double lambda = 1e-3;
    int epochs = 50;
    std::uint64_t seed = 0;
    /// When set, svm_train records the epoch-mean full-data objective
    /// (lambda/2 |w|^2 + mean hinge) after every step. O(n^2 d) per epoch,
    /// so it is for diagnostics and tests, not the experiment path.
    bool track_objective = false;

    void validate() const;
};

/// Linear soft-margin SVM trained with the Pegasos schedule
/// (eta_t = 1 / (lambda t), seeded shuffle per epoch). Labels {0, 1} map to
/// {-1, +1}; the bias stays unregularized.
struct SvmModel {
    std::vector<double> weights;
    double bias = 0.0;
    double lambda = 0.0;
    std::vector<double> epoch_mean_objectives; // only when track_objective
};

SvmModel svm_train(const std::vector<AssembledFeatures>& samples, const SvmTrainConfig& config);

double svm_decision(const SvmModel& model, std::span<const double> features);

/// sign(w.x + b) mapped to {0, 1}; an exact zero decides class 1.
int svm_predict(const SvmModel& model, std::span<const double> features);

/// Fraction of correctly classified samples.
double svm_accuracy(const SvmModel& model, const std::vector<AssembledFeatures>& samples);

/// Full objective at (w, b): lambda/2 |w|^2 + mean hinge loss.
double svm_objective(const SvmModel& model, const std::vector<AssembledFeatures>& samples);

} // namespace bcnn
