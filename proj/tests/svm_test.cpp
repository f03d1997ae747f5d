#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bcnn/error.hpp"
#include "bcnn/rng.hpp"
#include "bcnn/svm.hpp"

using namespace bcnn;

namespace {

std::vector<AssembledFeatures> two_point_problem(double scale = 1.0) {
    return {{{-scale}, "a", 0}, {{scale}, "b", 1}};
}

// independently coded batch subgradient descent on the same objective; the
// oracle for prediction agreement
SvmModel oracle_train(const std::vector<AssembledFeatures>& samples, double lambda, int iters) {
    const std::size_t dim = samples.front().vector.size();
    SvmModel model;
    model.weights.assign(dim, 0.0);
    model.lambda = lambda;
    const double n = static_cast<double>(samples.size());
    for (int it = 1; it <= iters; ++it) {
        std::vector<double> grad(dim, 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            grad[i] = lambda * model.weights[i];
        }
        for (const AssembledFeatures& s : samples) {
            const double y = s.label == 1 ? 1.0 : -1.0;
            double margin = model.bias;
            for (std::size_t i = 0; i < dim; ++i) {
                margin += model.weights[i] * s.vector[i];
            }
            if (y * margin < 1.0) {
                for (std::size_t i = 0; i < dim; ++i) {
                    grad[i] -= y * s.vector[i] / n;
                }
                grad_b -= y / n;
            }
        }
        const double eta = 1.0 / (lambda * it);
        for (std::size_t i = 0; i < dim; ++i) {
            model.weights[i] -= eta * grad[i];
        }
        model.bias -= eta * grad_b;
    }
    return model;
}

std::vector<AssembledFeatures> random_separable(int count, int dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> true_w(static_cast<std::size_t>(dim));
    for (double& w : true_w) {
        w = rng.uniform_in(-1.0, 1.0);
    }
    std::vector<AssembledFeatures> samples;
    for (int i = 0; i < count; ++i) {
        AssembledFeatures s;
        s.source = "s" + std::to_string(i);
        s.vector.resize(static_cast<std::size_t>(dim));
        double margin = 0.0;
        for (int d = 0; d < dim; ++d) {
            s.vector[static_cast<std::size_t>(d)] = rng.uniform_in(-1.0, 1.0);
            margin += true_w[static_cast<std::size_t>(d)] * s.vector[static_cast<std::size_t>(d)];
        }
        // push points away from the separating plane
        if (std::fabs(margin) < 0.2) {
            const double sign = margin >= 0 ? 1.0 : -1.0;
            for (int d = 0; d < dim; ++d) {
                s.vector[static_cast<std::size_t>(d)] +=
                    sign * 0.3 * true_w[static_cast<std::size_t>(d)];
            }
            margin += sign * 0.3;
        }
        s.label = margin >= 0 ? 1 : 0;
        samples.push_back(std::move(s));
    }
    return samples;
}

} // namespace

TEST(SvmTrain, SeparableTwoPointProblem) {
    SvmTrainConfig config;
    config.lambda = 0.01;
    const SvmModel model = svm_train(two_point_problem(), config);
    const auto samples = two_point_problem();
    EXPECT_EQ(svm_accuracy(model, samples), 1.0);
}

TEST(SvmTrain, EpochMeanObjectiveTrendsDown) {
    // pilot-calibrated trend check: single-step noise stays below 5% of the
    // descent range and the sequence ends no higher than it starts
    SvmTrainConfig config;
    config.lambda = 0.01;
    config.track_objective = true;
    const SvmModel model = svm_train(two_point_problem(), config);
    const std::vector<double>& objectives = model.epoch_mean_objectives;
    ASSERT_EQ(objectives.size(), 50u);
    const auto [lo, hi] = std::minmax_element(objectives.begin(), objectives.end());
    const double range = *hi - *lo;
    for (std::size_t e = 1; e < objectives.size(); ++e) {
        EXPECT_LE(objectives[e], objectives[e - 1] + 0.05 * range) << "epoch " << e;
    }
    EXPECT_LE(objectives.back(), objectives.front());
}

TEST(SvmTrain, EpochMeanObjectiveTrendOnRandomData) {
    SvmTrainConfig config;
    config.lambda = 1e-3;
    config.track_objective = true;
    config.seed = 5;
    const auto samples = random_separable(40, 5, 123);
    const SvmModel model = svm_train(samples, config);
    const std::vector<double>& objectives = model.epoch_mean_objectives;
    const auto [lo, hi] = std::minmax_element(objectives.begin(), objectives.end());
    const double range = *hi - *lo;
    for (std::size_t e = 1; e < objectives.size(); ++e) {
        EXPECT_LE(objectives[e], objectives[e - 1] + 0.05 * range) << "epoch " << e;
    }
    EXPECT_LE(objectives.back(), objectives.front());
}

TEST(SvmTrain, DeterministicUnderSeed) {
    SvmTrainConfig config;
    config.seed = 42;
    const auto samples = random_separable(30, 4, 9);
    const SvmModel a = svm_train(samples, config);
    const SvmModel b = svm_train(samples, config);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.bias, b.bias);
}

TEST(SvmTrain, InputValidation) {
    SvmTrainConfig config;
    EXPECT_THROW(svm_train({}, config), InputError);
    // single class
    std::vector<AssembledFeatures> one_class{{{1.0}, "a", 1}, {{2.0}, "b", 1}};
    EXPECT_THROW(svm_train(one_class, config), TrainingError);
    // mismatched lengths
    std::vector<AssembledFeatures> ragged{{{1.0}, "a", 0}, {{1.0, 2.0}, "b", 1}};
    EXPECT_THROW(svm_train(ragged, config), InputError);
}

TEST(SvmPredict, SignsAndTieRule) {
    SvmModel model;
    model.weights = {1.0};
    model.bias = 0.0;
    EXPECT_EQ(svm_predict(model, std::vector<double>{3.0}), 1);
    EXPECT_EQ(svm_predict(model, std::vector<double>{-2.0}), 0);
    EXPECT_EQ(svm_predict(model, std::vector<double>{0.0}), 1); // tie -> class 1
    EXPECT_THROW(svm_predict(model, std::vector<double>{1.0, 2.0}), InputError);
}

TEST(SvmPredict, AgreesWithIndependentOracle) {
    const auto samples = random_separable(200, 6, 2027);
    SvmTrainConfig config;
    config.lambda = 1e-2;
    config.epochs = 120;
    const SvmModel fast = svm_train(samples, config);
    const SvmModel slow = oracle_train(samples, 1e-2, 4000);
    int agree = 0;
    for (const AssembledFeatures& s : samples) {
        if (svm_predict(fast, s.vector) == svm_predict(slow, s.vector)) {
            ++agree;
        }
    }
    EXPECT_EQ(agree, 200);
    EXPECT_EQ(svm_accuracy(fast, samples), svm_accuracy(slow, samples));
}

TEST(SvmPredict, ScalingInvarianceOnAnalyticExample) {
    SvmTrainConfig config;
    config.lambda = 0.01;
    for (double scale : {1.0, 0.25, 40.0}) {
        const SvmModel model = svm_train(two_point_problem(scale), config);
        EXPECT_EQ(svm_predict(model, std::vector<double>{3.0 * scale}), 1) << scale;
        EXPECT_EQ(svm_predict(model, std::vector<double>{-3.0 * scale}), 0) << scale;
    }
}

TEST(SvmObjective, HingeSubgradientMatchesFiniteDifferences) {
    // at margins != 1 the objective is differentiable; compare the
    // closed-form subgradient with central differences
    const auto samples = random_separable(25, 3, 55);
    SvmTrainConfig config;
    config.epochs = 3;
    SvmModel model = svm_train(samples, config);

    const double lambda = model.lambda;
    const std::size_t dim = model.weights.size();
    const double n = static_cast<double>(samples.size());
    std::vector<double> analytic(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        analytic[i] = lambda * model.weights[i];
    }
    bool near_kink = false;
    for (const AssembledFeatures& s : samples) {
        const double y = s.label == 1 ? 1.0 : -1.0;
        const double margin = y * svm_decision(model, s.vector);
        if (std::fabs(margin - 1.0) < 1e-4) {
            near_kink = true;
        }
        if (margin < 1.0) {
            for (std::size_t i = 0; i < dim; ++i) {
                analytic[i] -= y * s.vector[i] / n;
            }
        }
    }
    ASSERT_FALSE(near_kink) << "pick a different seed: sample sits on the hinge";

    const double step = 1e-6;
    for (std::size_t i = 0; i < dim; ++i) {
        SvmModel plus = model, minus = model;
        plus.weights[i] += step;
        minus.weights[i] -= step;
        const double numeric =
            (svm_objective(plus, samples) - svm_objective(minus, samples)) / (2 * step);
        const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-8});
        EXPECT_LT(std::fabs(analytic[i] - numeric) / denom, 1e-6) << "weight " << i;
    }
}

TEST(SvmAccuracy, CountsAndErrors) {
    SvmModel model;
    model.weights = {1.0};
    model.bias = 0.0;
    std::vector<AssembledFeatures> all_right{{{2.0}, "a", 1}, {{-2.0}, "b", 0}};
    EXPECT_EQ(svm_accuracy(model, all_right), 1.0);
    std::vector<AssembledFeatures> half{{{2.0}, "a", 1},
                                        {{-2.0}, "b", 1},
                                        {{2.0}, "c", 0},
                                        {{-2.0}, "d", 0}};
    EXPECT_EQ(svm_accuracy(model, half), 0.5);
    EXPECT_THROW(svm_accuracy(model, {}), InputError);
}
