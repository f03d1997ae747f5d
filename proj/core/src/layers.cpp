#include "bcnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bcnn/error.hpp"

namespace bcnn {

void ConvSpec::validate() const {
    if (kernel_h < 1 || kernel_w < 1) {
        throw ParamError("conv: kernel dims must be >= 1");
    }
    if (out_channels < 1) {
        throw ParamError("conv: out_channels must be >= 1");
    }
    if (stride < 1) {
        throw ParamError("conv: stride must be >= 1");
    }
    if (padding < 0) {
        throw ParamError("conv: padding must be >= 0");
    }
}

void LrnSpec::validate() const {
    if (depth_radius < 0) {
        throw ParamError("lrn: depth_radius must be >= 0");
    }
    if (!(bias_k > 0.0)) {
        throw ParamError("lrn: bias k must be > 0");
    }
    if (alpha < 0.0) {
        throw ParamError("lrn: alpha must be >= 0");
    }
    if (!(beta > 0.0)) {
        throw ParamError("lrn: beta must be > 0");
    }
}

void PoolSpec::validate() const {
    if (window < 1 || stride < 1) {
        throw ParamError("pool: window and stride must be >= 1");
    }
}

int conv_extent(int in, int kernel, int stride, int padding) {
    return (in + 2 * padding - kernel) / stride + 1;
}

ConvDims conv_output_dims(int in_h, int in_w, const ConvSpec& spec) {
    spec.validate();
    const int oh = conv_extent(in_h, spec.kernel_h, spec.stride, spec.padding);
    const int ow = conv_extent(in_w, spec.kernel_w, spec.stride, spec.padding);
    if (oh < 1 || ow < 1) {
        throw ShapeError("conv: kernel " + std::to_string(spec.kernel_h) + "x" +
                         std::to_string(spec.kernel_w) + " does not fit input " +
                         std::to_string(in_h) + "x" + std::to_string(in_w));
    }
    return {oh, ow};
}

namespace {

// Patch matrix for one batch element: rows = out_h*out_w, cols = kh*kw*c.
// Padding cells read as zero.
void im2col(const Tensor& input, int b, const ConvSpec& spec, ConvDims dims, Matrix& cols) {
    const Shape& s = input.shape();
    const int kh = spec.kernel_h, kw = spec.kernel_w, c = s.channels;
    const double* base = input.data().data() +
                         static_cast<std::size_t>(b) * s.height * s.width * c;
    int row = 0;
    for (int oy = 0; oy < dims.out_h; ++oy) {
        for (int ox = 0; ox < dims.out_w; ++ox, ++row) {
            double* dst = cols.data.data() + static_cast<std::size_t>(row) * cols.cols;
            const int y0 = oy * spec.stride - spec.padding;
            const int x0 = ox * spec.stride - spec.padding;
            for (int ky = 0; ky < kh; ++ky) {
                const int y = y0 + ky;
                if (y < 0 || y >= s.height) {
                    std::fill(dst, dst + static_cast<std::size_t>(kw) * c, 0.0);
                    dst += static_cast<std::size_t>(kw) * c;
                    continue;
                }
                for (int kx = 0; kx < kw; ++kx) {
                    const int x = x0 + kx;
                    if (x < 0 || x >= s.width) {
                        std::fill(dst, dst + c, 0.0);
                    } else {
                        const double* src = base + (static_cast<std::size_t>(y) * s.width + x) * c;
                        std::copy(src, src + c, dst);
                    }
                    dst += c;
                }
            }
        }
    }
}

// Weight tensor (oc, kh, kw, ic) flattened to a (kh*kw*ic x oc) matrix whose
// row index matches the im2col column layout.
Matrix weights_as_matrix(const Tensor& weights) {
    const Shape& ws = weights.shape();
    const int k = ws.height * ws.width * ws.channels;
    Matrix m(k, ws.batch);
    for (int oc = 0; oc < ws.batch; ++oc) {
        const double* src = weights.data().data() + static_cast<std::size_t>(oc) * k;
        for (int i = 0; i < k; ++i) {
            m.at(i, oc) = src[i];
        }
    }
    return m;
}

void check_conv_inputs(const Tensor& input, const ConvSpec& spec, const Tensor& weights) {
    const Shape& ws = weights.shape();
    if (ws.batch != spec.out_channels || ws.height != spec.kernel_h ||
        ws.width != spec.kernel_w || ws.channels != input.shape().channels) {
        throw ShapeError("conv: weight shape " + to_string(ws) + " does not match spec/input");
    }
}

} // namespace

Tensor conv_forward(const Tensor& input, const ConvSpec& spec, const Tensor& weights,
                    const Tensor& bias) {
    const Shape& s = input.shape();
    const ConvDims dims = conv_output_dims(s.height, s.width, spec);
    check_conv_inputs(input, spec, weights);
    if (bias.shape().channels != spec.out_channels || bias.size() != spec.out_channels) {
        throw ShapeError("conv: bias must have one entry per output channel");
    }

    Tensor out(Shape{s.batch, dims.out_h, dims.out_w, spec.out_channels});
    const Matrix wmat = weights_as_matrix(weights);
    const int rows = dims.out_h * dims.out_w;
    Matrix cols(rows, spec.kernel_h * spec.kernel_w * s.channels);
    const std::size_t plane = static_cast<std::size_t>(rows) * spec.out_channels;
    for (int b = 0; b < s.batch; ++b) {
        im2col(input, b, spec, dims, cols);
        // Output layout (oy, ox, oc) is exactly the row-major product layout.
        matmul_into(cols.view(), wmat.view(), out.data().subspan(b * plane, plane));
    }
    const std::span<const double> bias_data = bias.data();
    double* od = out.data().data();
    const std::size_t cells = static_cast<std::size_t>(s.batch) * rows;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        for (int oc = 0; oc < spec.out_channels; ++oc) {
            od[cell * spec.out_channels + oc] += bias_data[oc];
        }
    }
    return out;
}

ConvGrads conv_backward(const Tensor& input, const ConvSpec& spec, const Tensor& weights,
                        const Tensor& grad_out) {
    const Shape& s = input.shape();
    const ConvDims dims = conv_output_dims(s.height, s.width, spec);
    check_conv_inputs(input, spec, weights);
    const Shape& gs = grad_out.shape();
    if (gs.batch != s.batch || gs.height != dims.out_h || gs.width != dims.out_w ||
        gs.channels != spec.out_channels) {
        throw ShapeError("conv backward: grad_out shape " + to_string(gs) + " unexpected");
    }

    ConvGrads grads{Tensor(s), Tensor(weights.shape()), Tensor(bcnn::Shape{1, 1, 1, spec.out_channels})};
    const int rows = dims.out_h * dims.out_w;
    const int k = spec.kernel_h * spec.kernel_w * s.channels;
    const int oc_n = spec.out_channels;
    const Matrix wmat = weights_as_matrix(weights);
    Matrix cols(rows, k);
    Matrix grad_wmat(k, oc_n);
    Matrix grad_cols(rows, k);

    for (int b = 0; b < s.batch; ++b) {
        const double* go = grad_out.data().data() + static_cast<std::size_t>(b) * rows * oc_n;

        // bias gradient: column sums of grad_out
        for (int r = 0; r < rows; ++r) {
            for (int oc = 0; oc < oc_n; ++oc) {
                grads.bias.data()[oc] += go[static_cast<std::size_t>(r) * oc_n + oc];
            }
        }

        // weight gradient: cols^T * grad_out, accumulated across the batch
        im2col(input, b, spec, dims, cols);
        for (int r = 0; r < rows; ++r) {
            const double* col_row = cols.data.data() + static_cast<std::size_t>(r) * k;
            const double* go_row = go + static_cast<std::size_t>(r) * oc_n;
            for (int i = 0; i < k; ++i) {
                const double v = col_row[i];
                double* gw_row = grad_wmat.data.data() + static_cast<std::size_t>(i) * oc_n;
                for (int oc = 0; oc < oc_n; ++oc) {
                    gw_row[oc] += v * go_row[oc];
                }
            }
        }

        // input gradient: (grad_out * wmat^T) scattered back through col2im
        for (int r = 0; r < rows; ++r) {
            const double* go_row = go + static_cast<std::size_t>(r) * oc_n;
            double* gc_row = grad_cols.data.data() + static_cast<std::size_t>(r) * k;
            std::fill(gc_row, gc_row + k, 0.0);
            for (int oc = 0; oc < oc_n; ++oc) {
                const double g = go_row[oc];
                const double* w_col = wmat.data.data();
                for (int i = 0; i < k; ++i) {
                    gc_row[i] += g * w_col[static_cast<std::size_t>(i) * oc_n + oc];
                }
            }
        }
        double* gi = grads.input.data().data() +
                     static_cast<std::size_t>(b) * s.height * s.width * s.channels;
        int row = 0;
        for (int oy = 0; oy < dims.out_h; ++oy) {
            for (int ox = 0; ox < dims.out_w; ++ox, ++row) {
                const double* src = grad_cols.data.data() + static_cast<std::size_t>(row) * k;
                const int y0 = oy * spec.stride - spec.padding;
                const int x0 = ox * spec.stride - spec.padding;
                for (int ky = 0; ky < spec.kernel_h; ++ky) {
                    const int y = y0 + ky;
                    if (y < 0 || y >= s.height) {
                        src += static_cast<std::size_t>(spec.kernel_w) * s.channels;
                        continue;
                    }
                    for (int kx = 0; kx < spec.kernel_w; ++kx) {
                        const int x = x0 + kx;
                        if (x >= 0 && x < s.width) {
                            double* dst = gi + (static_cast<std::size_t>(y) * s.width + x) * s.channels;
                            for (int c = 0; c < s.channels; ++c) {
                                dst[c] += src[c];
                            }
                        }
                        src += s.channels;
                    }
                }
            }
        }
    }

    // scatter grad_wmat back into tensor layout (oc, kh, kw, ic)
    for (int oc = 0; oc < oc_n; ++oc) {
        double* dst = grads.weights.data().data() + static_cast<std::size_t>(oc) * k;
        for (int i = 0; i < k; ++i) {
            dst[i] = grad_wmat.at(i, oc);
        }
    }
    return grads;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out(input.shape());
    const std::span<const double> in = input.data();
    std::span<double> od = out.data();
    for (std::size_t i = 0; i < in.size(); ++i) {
        od[i] = in[i] > 0.0 ? in[i] : 0.0;
    }
    return out;
}

Tensor relu_backward(const Tensor& grad_out, const Tensor& cached_input) {
    if (!(grad_out.shape() == cached_input.shape())) {
        throw ShapeError("relu backward: gradient and cached input shapes differ");
    }
    Tensor out(grad_out.shape());
    const std::span<const double> g = grad_out.data();
    const std::span<const double> in = cached_input.data();
    std::span<double> od = out.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
        od[i] = in[i] > 0.0 ? g[i] : 0.0;
    }
    return out;
}

namespace {

// scale^(-beta); beta 0.75 is the default and gets a sqrt-only fast path
inline double inv_pow_beta(double scale, double beta) {
    if (beta == 0.75) {
        return 1.0 / std::sqrt(scale * std::sqrt(scale));
    }
    return std::pow(scale, -beta);
}

} // namespace

Tensor lrn_forward(const Tensor& input, const LrnSpec& spec) {
    spec.validate();
    const Shape& s = input.shape();
    Tensor out(s);
    const int channels = s.channels;
    const int r = spec.depth_radius;
    const double* in = input.data().data();
    double* od = out.data().data();
    const std::size_t cells = static_cast<std::size_t>(s.batch) * s.height * s.width;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const double* a = in + cell * channels;
        double* o = od + cell * channels;
        for (int c = 0; c < channels; ++c) {
            const int lo = std::max(0, c - r);
            const int hi = std::min(channels - 1, c + r);
            double sum_sq = 0.0;
            for (int cc = lo; cc <= hi; ++cc) {
                sum_sq += a[cc] * a[cc];
            }
            const double n = static_cast<double>(hi - lo + 1);
            const double scale = spec.bias_k + spec.alpha / n * sum_sq;
            o[c] = a[c] * inv_pow_beta(scale, spec.beta);
        }
    }
    return out;
}

Tensor lrn_backward(const Tensor& grad_out, const Tensor& cached_input, const LrnSpec& spec) {
    spec.validate();
    if (!(grad_out.shape() == cached_input.shape())) {
        throw ShapeError("lrn backward: gradient and cached input shapes differ");
    }
    const Shape& s = cached_input.shape();
    Tensor out(s);
    const int channels = s.channels;
    const int r = spec.depth_radius;
    const double* in = cached_input.data().data();
    const double* g = grad_out.data().data();
    double* od = out.data().data();
    std::vector<double> scale(channels);
    std::vector<double> inv_n(channels);
    const std::size_t cells = static_cast<std::size_t>(s.batch) * s.height * s.width;
    for (std::size_t cell = 0; cell < cells; ++cell) {
        const double* a = in + cell * channels;
        const double* gc = g + cell * channels;
        double* o = od + cell * channels;
        for (int c = 0; c < channels; ++c) {
            const int lo = std::max(0, c - r);
            const int hi = std::min(channels - 1, c + r);
            double sum_sq = 0.0;
            for (int cc = lo; cc <= hi; ++cc) {
                sum_sq += a[cc] * a[cc];
            }
            inv_n[c] = 1.0 / static_cast<double>(hi - lo + 1);
            scale[c] = spec.bias_k + spec.alpha * inv_n[c] * sum_sq;
        }
        for (int d = 0; d < channels; ++d) {
            double acc = gc[d] * inv_pow_beta(scale[d], spec.beta);
            const int lo = std::max(0, d - r);
            const int hi = std::min(channels - 1, d + r);
            for (int c = lo; c <= hi; ++c) {
                // scale^(-beta-1) = scale^(-beta) / scale
                acc -= 2.0 * spec.beta * spec.alpha * inv_n[c] * a[d] * gc[c] * a[c] *
                       inv_pow_beta(scale[c], spec.beta) / scale[c];
            }
            o[d] = acc;
        }
    }
    return out;
}

PoolResult maxpool_forward(const Tensor& input, const PoolSpec& spec) {
    spec.validate();
    const Shape& s = input.shape();
    if (spec.window > s.height || spec.window > s.width) {
        throw ShapeError("maxpool: window " + std::to_string(spec.window) +
                         " exceeds input " + std::to_string(s.height) + "x" +
                         std::to_string(s.width));
    }
    const int oh = conv_extent(s.height, spec.window, spec.stride, 0);
    const int ow = conv_extent(s.width, spec.window, spec.stride, 0);
    PoolResult result{Tensor(Shape{s.batch, oh, ow, s.channels}), {}};
    result.argmax.resize(static_cast<std::size_t>(result.output.size()));
    const double* in = input.data().data();
    double* od = result.output.data().data();
    std::size_t out_idx = 0;
    for (int b = 0; b < s.batch; ++b) {
        const std::size_t base = static_cast<std::size_t>(b) * s.height * s.width * s.channels;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                for (int c = 0; c < s.channels; ++c, ++out_idx) {
                    // seed with the window's first element so argmax is always
                    // a valid index (ties and NaN floods keep the first slot)
                    const std::size_t first =
                        base + (static_cast<std::size_t>(oy * spec.stride) * s.width +
                                ox * spec.stride) *
                                   s.channels +
                        c;
                    double best = in[first];
                    std::int64_t best_idx = static_cast<std::int64_t>(first);
                    for (int py = 0; py < spec.window; ++py) {
                        const int y = oy * spec.stride + py;
                        for (int px = 0; px < spec.window; ++px) {
                            const int x = ox * spec.stride + px;
                            const std::size_t idx =
                                base + (static_cast<std::size_t>(y) * s.width + x) * s.channels + c;
                            // strict > keeps the first maximum in scan order
                            if (in[idx] > best) {
                                best = in[idx];
                                best_idx = static_cast<std::int64_t>(idx);
                            }
                        }
                    }
                    od[out_idx] = best;
                    result.argmax[out_idx] = best_idx;
                }
            }
        }
    }
    return result;
}

Tensor maxpool_backward(const Tensor& grad_out, const std::vector<std::int64_t>& argmax,
                        const Shape& input_shape) {
    if (static_cast<std::int64_t>(argmax.size()) != grad_out.size()) {
        throw ShapeError("maxpool backward: argmax size does not match gradient");
    }
    Tensor out(input_shape);
    const std::span<const double> g = grad_out.data();
    std::span<double> od = out.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
        od[static_cast<std::size_t>(argmax[i])] += g[i];
    }
    return out;
}

Matrix fc_forward(const Matrix& features, const Matrix& weights, const std::vector<double>& bias) {
    if (features.cols != weights.rows || static_cast<int>(bias.size()) != weights.cols) {
        throw ShapeError("fc: feature/weight/bias dimensions disagree");
    }
    Matrix logits = matmul(features.view(), weights.view());
    for (int r = 0; r < logits.rows; ++r) {
        for (int c = 0; c < logits.cols; ++c) {
            logits.at(r, c) += bias[c];
        }
    }
    return logits;
}

FcGrads fc_backward(const Matrix& features, const Matrix& weights, const Matrix& grad_logits) {
    if (grad_logits.rows != features.rows || grad_logits.cols != weights.cols) {
        throw ShapeError("fc backward: grad_logits shape unexpected");
    }
    FcGrads grads{Matrix(features.rows, features.cols), Matrix(weights.rows, weights.cols),
                  std::vector<double>(weights.cols, 0.0)};
    // grad_w = features^T * grad_logits
    for (int r = 0; r < features.rows; ++r) {
        const double* f_row = features.data.data() + static_cast<std::size_t>(r) * features.cols;
        const double* g_row = grad_logits.data.data() + static_cast<std::size_t>(r) * grad_logits.cols;
        for (int i = 0; i < features.cols; ++i) {
            double* w_row = grads.weights.data.data() + static_cast<std::size_t>(i) * weights.cols;
            for (int j = 0; j < weights.cols; ++j) {
                w_row[j] += f_row[i] * g_row[j];
            }
        }
        for (int j = 0; j < weights.cols; ++j) {
            grads.bias[j] += g_row[j];
        }
    }
    // grad_features = grad_logits * weights^T
    for (int r = 0; r < features.rows; ++r) {
        const double* g_row = grad_logits.data.data() + static_cast<std::size_t>(r) * grad_logits.cols;
        double* out_row = grads.features.data.data() + static_cast<std::size_t>(r) * features.cols;
        for (int i = 0; i < features.cols; ++i) {
            const double* w_row = weights.data.data() + static_cast<std::size_t>(i) * weights.cols;
            double acc = 0.0;
            for (int j = 0; j < weights.cols; ++j) {
                acc += g_row[j] * w_row[j];
            }
            out_row[i] = acc;
        }
    }
    return grads;
}

Matrix softmax(const Matrix& logits) {
    Matrix probs(logits.rows, logits.cols);
    for (int r = 0; r < logits.rows; ++r) {
        const double* row = logits.data.data() + static_cast<std::size_t>(r) * logits.cols;
        double* out = probs.data.data() + static_cast<std::size_t>(r) * logits.cols;
        double max_v = row[0];
        for (int c = 1; c < logits.cols; ++c) {
            max_v = std::max(max_v, row[c]);
        }
        double sum = 0.0;
        for (int c = 0; c < logits.cols; ++c) {
            out[c] = std::exp(row[c] - max_v);
            sum += out[c];
        }
        for (int c = 0; c < logits.cols; ++c) {
            out[c] /= sum;
        }
    }
    return probs;
}

SoftmaxLossResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != logits.rows) {
        throw InputError("softmax_cross_entropy: one label per batch row required");
    }
    SoftmaxLossResult result;
    result.probabilities = softmax(logits);
    result.grad_logits = result.probabilities;
    const double inv_batch = 1.0 / logits.rows;
    double loss = 0.0;
    for (int r = 0; r < logits.rows; ++r) {
        const int label = labels[static_cast<std::size_t>(r)];
        if (label < 0 || label >= logits.cols) {
            throw InputError("softmax_cross_entropy: label out of range");
        }
        // a numerically zero probability is a diverged network; the raw log
        // surfaces it as an infinite loss for the training guard
        const double p = result.probabilities.at(r, label);
        loss -= std::log(p);
        result.grad_logits.at(r, label) -= 1.0;
    }
    for (double& g : result.grad_logits.data) {
        g *= inv_batch;
    }
    result.loss = loss * inv_batch;
    return result;
}

} // namespace bcnn
