#pragma once

#include <cstdint>
#include <vector>

#include "bcnn/tensor.hpp"

namespace bcnn {

struct ConvSpec {
    int kernel_h = 1;
    int kernel_w = 1;
    int out_channels = 1;
    int stride = 1;
    int padding = 0;

    void validate() const;
};

/// Across-channel response normalization:
///   out_c = in_c / (k + (alpha/n) * sum_{c' in window(c)} in_{c'}^2)^beta
/// where window(c) spans channels within depth_radius of c, clipped to the
/// valid range, and n is the clipped window size.
struct LrnSpec {
    int depth_radius = 2;
    double bias_k = 2.0;
    double alpha = 1e-4;
    double beta = 0.75;

    void validate() const;
};

struct PoolSpec {
    int window = 1; // square
    int stride = 1;

    void validate() const;
};

/// Output extent of a valid (optionally padded) convolution or pooling along
/// one axis: floor((in + 2*pad - k) / stride) + 1.
int conv_extent(int in, int kernel, int stride, int padding);

struct ConvDims {
    int out_h = 0;
    int out_w = 0;
};
ConvDims conv_output_dims(int in_h, int in_w, const ConvSpec& spec);

/// Cross-correlation (no kernel flip) plus per-output-channel bias.
/// weights has shape (out_channels, kernel_h, kernel_w, in_channels);
/// bias has shape (1, 1, 1, out_channels). Runs on an im2col + matmul path.
Tensor conv_forward(const Tensor& input, const ConvSpec& spec, const Tensor& weights,
                    const Tensor& bias);

struct ConvGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};
ConvGrads conv_backward(const Tensor& input, const ConvSpec& spec, const Tensor& weights,
                        const Tensor& grad_out);

Tensor relu_forward(const Tensor& input);
/// Passes gradient where the cached input was > 0; zero elsewhere (the
/// derivative at exactly 0 is taken as 0).
Tensor relu_backward(const Tensor& grad_out, const Tensor& cached_input);

Tensor lrn_forward(const Tensor& input, const LrnSpec& spec);
Tensor lrn_backward(const Tensor& grad_out, const Tensor& cached_input, const LrnSpec& spec);

struct PoolResult {
    Tensor output;
    /// Flat index into the input tensor of each output element's maximum;
    /// ties resolve to the first candidate in row-major window scan order.
    std::vector<std::int64_t> argmax;
};
PoolResult maxpool_forward(const Tensor& input, const PoolSpec& spec);
Tensor maxpool_backward(const Tensor& grad_out, const std::vector<std::int64_t>& argmax,
                        const Shape& input_shape);

/// logits = features * weights + bias; features is (batch x in), weights is
/// (in x out), bias has out entries.
Matrix fc_forward(const Matrix& features, const Matrix& weights, const std::vector<double>& bias);

struct FcGrads {
    Matrix features;
    Matrix weights;
    std::vector<double> bias;
};
FcGrads fc_backward(const Matrix& features, const Matrix& weights, const Matrix& grad_logits);

/// Row-wise softmax with max subtraction.
Matrix softmax(const Matrix& logits);

struct SoftmaxLossResult {
    double loss = 0.0;         // mean cross-entropy over the batch
    Matrix probabilities;      // softmax rows
    Matrix grad_logits;        // (p - onehot) / batch
};
SoftmaxLossResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels);

} // namespace bcnn
