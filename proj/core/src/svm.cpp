#include "bcnn/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bcnn/error.hpp"
#include "bcnn/rng.hpp"

namespace bcnn {

void SvmTrainConfig::validate() const {
    if (!(lambda > 0.0)) {
        throw ParamError("svm: lambda must be > 0");
    }
    if (epochs < 1) {
        throw ParamError("svm: epochs must be >= 1");
    }
}

namespace {

void check_features(const std::vector<AssembledFeatures>& samples) {
    if (samples.empty()) {
        throw InputError("svm: empty sample list");
    }
    const std::size_t dim = samples.front().vector.size();
    bool seen[2] = {false, false};
    for (const AssembledFeatures& s : samples) {
        if (s.vector.size() != dim) {
            throw InputError("svm: feature length mismatch (" + std::to_string(s.vector.size()) +
                             " vs " + std::to_string(dim) + ")");
        }
        if (s.label < 0 || s.label > 1) {
            throw InputError("svm: labels must be 0 or 1");
        }
        seen[s.label] = true;
    }
    if (!seen[0] || !seen[1]) {
        throw TrainingError("svm: need at least one sample of each class");
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

} // namespace

double svm_objective(const SvmModel& model, const std::vector<AssembledFeatures>& samples) {
    double hinge = 0.0;
    for (const AssembledFeatures& s : samples) {
        const double y = s.label == 1 ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - y * (dot(model.weights, s.vector) + model.bias));
    }
    const double norm_sq = dot(model.weights, model.weights);
    return model.lambda / 2.0 * norm_sq + hinge / static_cast<double>(samples.size());
}

SvmModel svm_train(const std::vector<AssembledFeatures>& samples, const SvmTrainConfig& config) {
    config.validate();
    check_features(samples);

    const std::size_t dim = samples.front().vector.size();
    SvmModel model;
    model.weights.assign(dim, 0.0);
    model.lambda = config.lambda;

    Rng rng(derive_seed(config.seed, {0x73766d747261696eull})); // "svmtrain"
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    std::int64_t t = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double objective_acc = 0.0;
        for (std::size_t idx : order) {
            ++t;
            const double eta = 1.0 / (config.lambda * static_cast<double>(t));
            const AssembledFeatures& s = samples[idx];
            const double y = s.label == 1 ? 1.0 : -1.0;
            const double margin = y * (dot(model.weights, s.vector) + model.bias);
            const double shrink = 1.0 - eta * config.lambda;
            if (margin < 1.0) {
                for (std::size_t i = 0; i < dim; ++i) {
                    model.weights[i] = shrink * model.weights[i] + eta * y * s.vector[i];
                }
                model.bias += eta * y;
            } else {
                for (double& w : model.weights) {
                    w *= shrink;
                }
            }
            if (config.track_objective) {
                objective_acc += svm_objective(model, samples);
            }
        }
        if (config.track_objective) {
            model.epoch_mean_objectives.push_back(objective_acc /
                                                  static_cast<double>(samples.size()));
        }
    }
    for (double w : model.weights) {
        if (!std::isfinite(w)) {
            throw TrainingError("svm: weights diverged");
        }
    }
    return model;
}

double svm_decision(const SvmModel& model, std::span<const double> features) {
    if (features.size() != model.weights.size()) {
        throw InputError("svm: feature length " + std::to_string(features.size()) +
                         " does not match model (" + std::to_string(model.weights.size()) + ")");
    }
    return dot(model.weights, features) + model.bias;
}

int svm_predict(const SvmModel& model, std::span<const double> features) {
    return svm_decision(model, features) >= 0.0 ? 1 : 0;
}

double svm_accuracy(const SvmModel& model, const std::vector<AssembledFeatures>& samples) {
    if (samples.empty()) {
        throw InputError("svm accuracy: empty test set");
    }
    int correct = 0;
    for (const AssembledFeatures& s : samples) {
        if (svm_predict(model, s.vector) == s.label) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(samples.size());
}

} // namespace bcnn
