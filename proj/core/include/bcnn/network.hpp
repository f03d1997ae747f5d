#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bcnn/layers.hpp"
#include "bcnn/tensor.hpp"

namespace bcnn {

struct InputShape {
    int height = 0;
    int width = 0;
    int channels = 0;
    bool operator==(const InputShape&) const = default;
};

struct BlockSpec {
    ConvSpec conv;
    LrnSpec lrn;
    PoolSpec pool;
};

struct LayerShape {
    std::string name;
    int height = 0;
    int width = 0;
    int channels = 0;
};

/// Per-layer output extents for a block chain, input layer included.
/// Throws SpecError naming the first layer whose output would collapse.
std::vector<LayerShape> shape_arithmetic(const InputShape& input,
                                         const std::vector<BlockSpec>& blocks);

/// Description of the block-structured network: N blocks of
/// conv -> relu -> cross-channel norm -> maxpool, then a fully-connected
/// binary head with softmax and an argmax classification layer.
/// Shape-validated at construction.
class ArchitectureSpec {
public:
    ArchitectureSpec(InputShape input, std::vector<BlockSpec> blocks, int num_classes = 2);

    /// Full-size 5-block architecture: 500x400x3 input (the 400 axis is the
    /// one later halved into visual fields, so it is stored as width),
    /// kernels 15/11/9/7/5 with 10/15/20/25/30 channels, 3x3 stride-2 pools.
    static ArchitectureSpec paper();

    /// Desk-scale 5-block variant small enough to train on a laptop CPU:
    /// 100x80x3 input, kernels 5/3/3/3/3 with the same channel ladder,
    /// pools sized so the 40-wide visual-field input stays valid.
    static ArchitectureSpec desk();

    /// Same blocks and head on a different input extent (used for
    /// visual-field hemispheres). Re-validates.
    ArchitectureSpec with_input(int height, int width) const;

    const InputShape& input() const { return input_; }
    const std::vector<BlockSpec>& blocks() const { return blocks_; }
    int num_classes() const { return num_classes_; }

    /// 1 input + 4 per block + (fc, softmax, classification).
    int layer_count() const { return 1 + 4 * static_cast<int>(blocks_.size()) + 3; }

    /// Flattened length of the final pool output, the feature vector fed to
    /// the SVM head.
    int feature_length() const;

    const std::vector<LayerShape>& layer_shapes() const { return layer_shapes_; }

    /// Stable textual form; also the basis of hash().
    std::string describe() const;
    std::uint64_t hash() const;

    bool operator==(const ArchitectureSpec& other) const;

private:
    InputShape input_;
    std::vector<BlockSpec> blocks_;
    int num_classes_ = 2;
    std::vector<LayerShape> layer_shapes_;
};

struct ConvParams {
    Tensor weights; // (out_channels, kernel_h, kernel_w, in_channels)
    Tensor bias;    // (1, 1, 1, out_channels)
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double momentum = 0.9;
    int epochs = 4;
    int batch_size = 8;
    /// Multiplier on the sqrt(2 / fan_in) per-layer init stddev.
    double weight_init_stddev = 1.0;

    void validate() const;
};

/// The trainable network: parameters plus forward passes. Training caches
/// live in the trainer, so a constructed Network is safe to share read-only.
class Network {
public:
    explicit Network(ArchitectureSpec spec);

    /// Gaussian init, stddev scale * sqrt(2 / fan_in) per layer, zero biases.
    static Network initialized(const ArchitectureSpec& spec, double init_scale, Rng& rng);

    const ArchitectureSpec& spec() const { return spec_; }

    std::vector<ConvParams>& conv_params() { return conv_; }
    const std::vector<ConvParams>& conv_params() const { return conv_; }
    Matrix& fc_weights() { return fc_weights_; }
    const Matrix& fc_weights() const { return fc_weights_; }
    std::vector<double>& fc_bias() { return fc_bias_; }
    const std::vector<double>& fc_bias() const { return fc_bias_; }

    bool all_parameters_finite() const;

    /// Flattened final-pool activations, one row per batch element.
    Matrix features(const Tensor& batch) const;
    Matrix logits(const Tensor& batch) const;
    Matrix probabilities(const Tensor& batch) const;
    /// The classification layer: argmax over softmax outputs.
    std::vector<int> classify(const Tensor& batch) const;

private:
    ArchitectureSpec spec_;
    std::vector<ConvParams> conv_;
    Matrix fc_weights_;
    std::vector<double> fc_bias_;
};

/// Deterministic feature extraction for a single image (batch of one).
std::vector<double> extract_features(const Network& net, const Tensor& image);

/// All parameter gradients for a labelled batch, mean cross-entropy loss.
struct ParamGrads {
    std::vector<ConvParams> conv;
    Matrix fc_weights;
    std::vector<double> fc_bias;
};
ParamGrads compute_param_gradients(const Network& net, const Tensor& batch,
                                   const std::vector<int>& labels, double* loss_out = nullptr);

/// SGD momentum buffers, one per parameter tensor.
struct SgdState {
    std::vector<ConvParams> conv_velocity;
    Matrix fc_weights_velocity;
    std::vector<double> fc_bias_velocity;

    static SgdState zeros_like(const Network& net);
};

/// One SGD-with-momentum step on a labelled batch; returns the batch loss.
/// Throws TrainingError if the loss is not finite (divergence).
double train_step(Network& net, const Tensor& batch, const std::vector<int>& labels,
                  const TrainConfig& config, SgdState& state);

} // namespace bcnn
