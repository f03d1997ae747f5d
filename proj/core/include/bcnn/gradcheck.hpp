#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bcnn/network.hpp"

namespace bcnn {

struct GradCheckConfig {
    double tolerance = 1e-4;
    double step = 1e-5;          // central difference half-width
    int max_samples_per_tensor = 25;
    std::uint64_t seed = 0;      // picks which parameters get sampled
};

struct GradCheckEntry {
    std::string layer;
    std::int64_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    bool pass = false;
    int checked = 0;
    GradCheckEntry worst; // largest relative error seen
};

/// Compare supplied analytic gradients against central finite differences of
/// the batch loss, sampling up to max_samples_per_tensor entries per
/// parameter tensor. Parameters are perturbed in place and restored.
GradCheckReport compare_gradients(Network& net, const Tensor& batch,
                                  const std::vector<int>& labels, const ParamGrads& analytic,
                                  const GradCheckConfig& config);

/// Full check: analytic gradients from the network's own backward pass.
GradCheckReport gradient_check(Network& net, const Tensor& batch, const std::vector<int>& labels,
                               const GradCheckConfig& config);

} // namespace bcnn
