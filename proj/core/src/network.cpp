#include "bcnn/network.hpp"

#include <cmath>
#include <sstream>

#include "bcnn/error.hpp"

namespace bcnn {

std::vector<LayerShape> shape_arithmetic(const InputShape& input,
                                         const std::vector<BlockSpec>& blocks) {
    if (input.height < 1 || input.width < 1 || input.channels < 1) {
        throw SpecError("input: dimensions must be >= 1");
    }
    if (blocks.empty()) {
        throw SpecError("blocks: at least one block required");
    }
    std::vector<LayerShape> shapes;
    shapes.push_back({"input", input.height, input.width, input.channels});
    int h = input.height, w = input.width, c = input.channels;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const std::string idx = std::to_string(i + 1);
        const BlockSpec& block = blocks[i];
        block.conv.validate();
        block.lrn.validate();
        block.pool.validate();

        const int ch = conv_extent(h, block.conv.kernel_h, block.conv.stride, block.conv.padding);
        const int cw = conv_extent(w, block.conv.kernel_w, block.conv.stride, block.conv.padding);
        if (ch < 1 || cw < 1) {
            throw SpecError("conv_" + idx + ": output " + std::to_string(ch) + "x" +
                            std::to_string(cw) + " collapses (input " + std::to_string(h) + "x" +
                            std::to_string(w) + ", kernel " + std::to_string(block.conv.kernel_h) +
                            "x" + std::to_string(block.conv.kernel_w) + ")");
        }
        h = ch;
        w = cw;
        c = block.conv.out_channels;
        shapes.push_back({"conv_" + idx, h, w, c});
        shapes.push_back({"relu_" + idx, h, w, c});
        shapes.push_back({"norm_" + idx, h, w, c});

        if (block.pool.window > h || block.pool.window > w) {
            throw SpecError("maxpool_" + idx + ": window " + std::to_string(block.pool.window) +
                            " exceeds input " + std::to_string(h) + "x" + std::to_string(w));
        }
        h = conv_extent(h, block.pool.window, block.pool.stride, 0);
        w = conv_extent(w, block.pool.window, block.pool.stride, 0);
        if (h < 1 || w < 1) {
            throw SpecError("maxpool_" + idx + ": output collapses");
        }
        shapes.push_back({"maxpool_" + idx, h, w, c});
    }
    return shapes;
}

ArchitectureSpec::ArchitectureSpec(InputShape input, std::vector<BlockSpec> blocks,
                                   int num_classes)
    : input_(input), blocks_(std::move(blocks)), num_classes_(num_classes) {
    if (num_classes_ < 2) {
        throw SpecError("head: at least two classes required");
    }
    layer_shapes_ = shape_arithmetic(input_, blocks_);
}

namespace {

std::vector<BlockSpec> ladder(const std::vector<int>& kernels, const std::vector<int>& channels,
                              const std::vector<PoolSpec>& pools) {
    std::vector<BlockSpec> blocks;
    for (std::size_t i = 0; i < kernels.size(); ++i) {
        BlockSpec b;
        b.conv = ConvSpec{kernels[i], kernels[i], channels[i], 1, 0};
        b.lrn = LrnSpec{};
        b.pool = pools[i];
        blocks.push_back(b);
    }
    return blocks;
}

} // namespace

ArchitectureSpec ArchitectureSpec::paper() {
    return ArchitectureSpec(
        InputShape{500, 400, 3},
        ladder({15, 11, 9, 7, 5}, {10, 15, 20, 25, 30},
               {PoolSpec{3, 2}, PoolSpec{3, 2}, PoolSpec{3, 2}, PoolSpec{3, 2}, PoolSpec{3, 2}}));
}

ArchitectureSpec ArchitectureSpec::desk() {
    return ArchitectureSpec(
        InputShape{100, 80, 3},
        ladder({5, 3, 3, 3, 3}, {10, 15, 20, 25, 30},
               {PoolSpec{2, 2}, PoolSpec{2, 2}, PoolSpec{2, 1}, PoolSpec{1, 1}, PoolSpec{1, 1}}));
}

ArchitectureSpec ArchitectureSpec::with_input(int height, int width) const {
    return ArchitectureSpec(InputShape{height, width, input_.channels}, blocks_, num_classes_);
}

int ArchitectureSpec::feature_length() const {
    const LayerShape& last = layer_shapes_.back();
    return last.height * last.width * last.channels;
}

std::string ArchitectureSpec::describe() const {
    std::ostringstream out;
    out << "input " << input_.height << "x" << input_.width << "x" << input_.channels;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const BlockSpec& b = blocks_[i];
        out << " | block" << i + 1 << " conv " << b.conv.kernel_h << "x" << b.conv.kernel_w << "x"
            << b.conv.out_channels << " s" << b.conv.stride << " p" << b.conv.padding << " lrn r"
            << b.lrn.depth_radius << " k" << b.lrn.bias_k << " a" << b.lrn.alpha << " b"
            << b.lrn.beta << " pool " << b.pool.window << "/" << b.pool.stride;
    }
    out << " | fc " << num_classes_;
    return out.str();
}

std::uint64_t ArchitectureSpec::hash() const {
    const std::string text = describe();
    return fnv1a(text.data(), text.size());
}

bool ArchitectureSpec::operator==(const ArchitectureSpec& other) const {
    return describe() == other.describe();
}

void TrainConfig::validate() const {
    // 0 is allowed so a no-op step stays expressible
    if (!(learning_rate >= 0.0)) {
        throw ParamError("train: learning_rate must be >= 0");
    }
    if (momentum < 0.0 || momentum >= 1.0) {
        throw ParamError("train: momentum must be in [0, 1)");
    }
    if (epochs < 1) {
        throw ParamError("train: epochs must be >= 1");
    }
    if (batch_size < 1) {
        throw ParamError("train: batch_size must be >= 1");
    }
    if (!(weight_init_stddev > 0.0)) {
        throw ParamError("train: weight_init_stddev must be > 0");
    }
}

Network::Network(ArchitectureSpec spec) : spec_(std::move(spec)) {
    int in_c = spec_.input().channels;
    for (const BlockSpec& block : spec_.blocks()) {
        ConvParams p;
        p.weights = Tensor(Shape{block.conv.out_channels, block.conv.kernel_h,
                                 block.conv.kernel_w, in_c});
        p.bias = Tensor(Shape{1, 1, 1, block.conv.out_channels});
        conv_.push_back(std::move(p));
        in_c = block.conv.out_channels;
    }
    fc_weights_ = Matrix(spec_.feature_length(), spec_.num_classes());
    fc_bias_.assign(static_cast<std::size_t>(spec_.num_classes()), 0.0);
}

Network Network::initialized(const ArchitectureSpec& spec, double init_scale, Rng& rng) {
    if (!(init_scale > 0.0)) {
        throw ParamError("init: scale must be > 0");
    }
    Network net(spec);
    for (ConvParams& p : net.conv_) {
        const Shape& ws = p.weights.shape();
        const double fan_in = static_cast<double>(ws.height) * ws.width * ws.channels;
        const double stddev = init_scale * std::sqrt(2.0 / fan_in);
        p.weights = Tensor::gaussian(ws, stddev, rng);
    }
    const double fc_stddev = init_scale * std::sqrt(2.0 / net.fc_weights_.rows);
    for (double& w : net.fc_weights_.data) {
        w = rng.normal(fc_stddev);
    }
    return net;
}

bool Network::all_parameters_finite() const {
    for (const ConvParams& p : conv_) {
        if (!p.weights.all_finite() || !p.bias.all_finite()) {
            return false;
        }
    }
    for (double w : fc_weights_.data) {
        if (!std::isfinite(w)) {
            return false;
        }
    }
    for (double b : fc_bias_) {
        if (!std::isfinite(b)) {
            return false;
        }
    }
    return true;
}

namespace {

struct ForwardCache {
    // per block: conv input, conv output (relu input), relu output (lrn
    // input), lrn output (pool input), pool argmax
    std::vector<Tensor> conv_in;
    std::vector<Tensor> conv_out;
    std::vector<Tensor> relu_out;
    std::vector<Tensor> lrn_out;
    std::vector<std::vector<std::int64_t>> pool_argmax;
    std::vector<Shape> pool_in_shape;
    Tensor block_out;
    Matrix features;
};

ForwardCache forward_blocks(const Network& net, const Tensor& batch, bool keep_cache) {
    const ArchitectureSpec& spec = net.spec();
    const Shape& in_shape = batch.shape();
    if (in_shape.height != spec.input().height || in_shape.width != spec.input().width ||
        in_shape.channels != spec.input().channels) {
        throw ShapeError("forward: batch shape " + to_string(in_shape) +
                         " does not match spec input");
    }
    ForwardCache cache;
    Tensor current = batch;
    const std::vector<BlockSpec>& blocks = spec.blocks();
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const BlockSpec& block = blocks[i];
        const ConvParams& params = net.conv_params()[i];
        Tensor conv_out = conv_forward(current, block.conv, params.weights, params.bias);
        Tensor relu_out = relu_forward(conv_out);
        Tensor lrn_out = lrn_forward(relu_out, block.lrn);
        PoolResult pooled = maxpool_forward(lrn_out, block.pool);
        if (keep_cache) {
            cache.conv_in.push_back(std::move(current));
            cache.conv_out.push_back(std::move(conv_out));
            cache.relu_out.push_back(std::move(relu_out));
            cache.pool_in_shape.push_back(lrn_out.shape());
            cache.lrn_out.push_back(std::move(lrn_out));
            cache.pool_argmax.push_back(std::move(pooled.argmax));
        }
        current = std::move(pooled.output);
    }
    const Tensor flat = flatten(current);
    cache.features = Matrix(in_shape.batch, spec.feature_length());
    std::copy(flat.data().begin(), flat.data().end(), cache.features.data.begin());
    cache.block_out = std::move(current);
    return cache;
}

} // namespace

Matrix Network::features(const Tensor& batch) const {
    return forward_blocks(*this, batch, false).features;
}

Matrix Network::logits(const Tensor& batch) const {
    return fc_forward(features(batch), fc_weights_, fc_bias_);
}

Matrix Network::probabilities(const Tensor& batch) const {
    return softmax(logits(batch));
}

std::vector<int> Network::classify(const Tensor& batch) const {
    const Matrix probs = probabilities(batch);
    std::vector<int> out(static_cast<std::size_t>(probs.rows));
    for (int r = 0; r < probs.rows; ++r) {
        int best = 0;
        for (int c = 1; c < probs.cols; ++c) {
            if (probs.at(r, c) > probs.at(r, best)) {
                best = c;
            }
        }
        out[static_cast<std::size_t>(r)] = best;
    }
    return out;
}

std::vector<double> extract_features(const Network& net, const Tensor& image) {
    if (image.shape().batch != 1) {
        throw ShapeError("extract_features: expected a single-image batch");
    }
    const Matrix m = net.features(image);
    return m.data;
}

ParamGrads compute_param_gradients(const Network& net, const Tensor& batch,
                                   const std::vector<int>& labels, double* loss_out) {
    ForwardCache cache = forward_blocks(net, batch, true);
    const Matrix logits = fc_forward(cache.features, net.fc_weights(), net.fc_bias());
    const SoftmaxLossResult loss = softmax_cross_entropy(logits, labels);
    if (loss_out != nullptr) {
        *loss_out = loss.loss;
    }

    ParamGrads grads;
    FcGrads fc = fc_backward(cache.features, net.fc_weights(), loss.grad_logits);
    grads.fc_weights = std::move(fc.weights);
    grads.fc_bias = std::move(fc.bias);

    // gradient w.r.t. the final pool output, reshaped from feature rows
    const Shape out_shape = cache.block_out.shape();
    Tensor grad = Tensor(out_shape);
    std::copy(fc.features.data.begin(), fc.features.data.end(), grad.data().begin());

    const std::vector<BlockSpec>& blocks = net.spec().blocks();
    grads.conv.resize(blocks.size());
    for (int i = static_cast<int>(blocks.size()) - 1; i >= 0; --i) {
        const BlockSpec& block = blocks[static_cast<std::size_t>(i)];
        const std::size_t idx = static_cast<std::size_t>(i);
        Tensor grad_lrn =
            maxpool_backward(grad, cache.pool_argmax[idx], cache.pool_in_shape[idx]);
        Tensor grad_relu = lrn_backward(grad_lrn, cache.relu_out[idx], block.lrn);
        Tensor grad_conv = relu_backward(grad_relu, cache.conv_out[idx]);
        ConvGrads cg = conv_backward(cache.conv_in[idx], block.conv,
                                     net.conv_params()[idx].weights, grad_conv);
        grads.conv[idx].weights = std::move(cg.weights);
        grads.conv[idx].bias = std::move(cg.bias);
        grad = std::move(cg.input);
    }
    return grads;
}

SgdState SgdState::zeros_like(const Network& net) {
    SgdState state;
    for (const ConvParams& p : net.conv_params()) {
        state.conv_velocity.push_back({Tensor(p.weights.shape()), Tensor(p.bias.shape())});
    }
    state.fc_weights_velocity = Matrix(net.fc_weights().rows, net.fc_weights().cols);
    state.fc_bias_velocity.assign(net.fc_bias().size(), 0.0);
    return state;
}

namespace {

void sgd_update(std::span<double> param, std::span<double> velocity, std::span<const double> grad,
                double lr, double momentum) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        velocity[i] = momentum * velocity[i] - lr * grad[i];
        param[i] += velocity[i];
    }
}

} // namespace

double train_step(Network& net, const Tensor& batch, const std::vector<int>& labels,
                  const TrainConfig& config, SgdState& state) {
    config.validate();
    double loss = 0.0;
    ParamGrads grads = compute_param_gradients(net, batch, labels, &loss);
    if (!std::isfinite(loss)) {
        throw TrainingError("train_step: loss diverged (non-finite)");
    }
    for (std::size_t i = 0; i < grads.conv.size(); ++i) {
        sgd_update(net.conv_params()[i].weights.data(), state.conv_velocity[i].weights.data(),
                   grads.conv[i].weights.data(), config.learning_rate, config.momentum);
        sgd_update(net.conv_params()[i].bias.data(), state.conv_velocity[i].bias.data(),
                   grads.conv[i].bias.data(), config.learning_rate, config.momentum);
    }
    sgd_update(net.fc_weights().data, state.fc_weights_velocity.data, grads.fc_weights.data,
               config.learning_rate, config.momentum);
    sgd_update(net.fc_bias(), state.fc_bias_velocity, grads.fc_bias, config.learning_rate,
               config.momentum);
    return loss;
}

} // namespace bcnn
