#include "bcnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "bcnn/error.hpp"
#include "bcnn/rng.hpp"

namespace bcnn {

namespace {

double batch_loss(const Network& net, const Tensor& batch, const std::vector<int>& labels) {
    double loss = 0.0;
    compute_param_gradients(net, batch, labels, &loss);
    return loss;
}

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
    return std::fabs(analytic - numeric) / denom;
}

std::vector<std::int64_t> sample_indices(std::int64_t count, int max_samples, Rng& rng) {
    std::vector<std::int64_t> indices;
    if (count <= max_samples) {
        for (std::int64_t i = 0; i < count; ++i) {
            indices.push_back(i);
        }
        return indices;
    }
    for (int i = 0; i < max_samples; ++i) {
        indices.push_back(rng.uniform_int(0, static_cast<int>(count - 1)));
    }
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    return indices;
}

void check_tensor(Network& net, const Tensor& batch, const std::vector<int>& labels,
                  std::span<double> params, std::span<const double> analytic,
                  const std::string& layer, const GradCheckConfig& config, Rng& rng,
                  GradCheckReport& report) {
    for (std::int64_t idx : sample_indices(static_cast<std::int64_t>(params.size()),
                                           config.max_samples_per_tensor, rng)) {
        const double saved = params[static_cast<std::size_t>(idx)];
        params[static_cast<std::size_t>(idx)] = saved + config.step;
        const double loss_plus = batch_loss(net, batch, labels);
        params[static_cast<std::size_t>(idx)] = saved - config.step;
        const double loss_minus = batch_loss(net, batch, labels);
        params[static_cast<std::size_t>(idx)] = saved;

        const double numeric = (loss_plus - loss_minus) / (2.0 * config.step);
        const double ana = analytic[static_cast<std::size_t>(idx)];
        const double rel = relative_error(ana, numeric);
        ++report.checked;
        if (rel > report.worst.rel_error) {
            report.worst = {layer, idx, ana, numeric, rel};
        }
    }
}

} // namespace

GradCheckReport compare_gradients(Network& net, const Tensor& batch,
                                  const std::vector<int>& labels, const ParamGrads& analytic,
                                  const GradCheckConfig& config) {
    if (analytic.conv.size() != net.conv_params().size()) {
        throw InputError("compare_gradients: gradient set does not match network");
    }
    Rng rng(derive_seed(config.seed, {0x6772616463686bull})); // "gradchk"
    GradCheckReport report;
    report.worst.rel_error = 0.0;
    for (std::size_t i = 0; i < net.conv_params().size(); ++i) {
        const std::string idx = std::to_string(i + 1);
        check_tensor(net, batch, labels, net.conv_params()[i].weights.data(),
                     analytic.conv[i].weights.data(), "conv_" + idx + ".weights", config, rng,
                     report);
        check_tensor(net, batch, labels, net.conv_params()[i].bias.data(),
                     analytic.conv[i].bias.data(), "conv_" + idx + ".bias", config, rng, report);
    }
    check_tensor(net, batch, labels, net.fc_weights().data, analytic.fc_weights.data,
                 "fc.weights", config, rng, report);
    check_tensor(net, batch, labels, net.fc_bias(), analytic.fc_bias, "fc.bias", config, rng,
                 report);
    report.pass = report.worst.rel_error < config.tolerance;
    return report;
}

GradCheckReport gradient_check(Network& net, const Tensor& batch, const std::vector<int>& labels,
                               const GradCheckConfig& config) {
    const ParamGrads analytic = compute_param_gradients(net, batch, labels);
    return compare_gradients(net, batch, labels, analytic, config);
}

} // namespace bcnn
