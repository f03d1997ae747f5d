#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bcnn/rng.hpp"

namespace bcnn {

/// Rank-4 extent in (batch, height, width, channels) order.
struct Shape {
    int batch = 0;
    int height = 0;
    int width = 0;
    int channels = 0;

    std::int64_t count() const {
        return static_cast<std::int64_t>(batch) * height * width * channels;
    }
    bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& shape);

/// Dense rank-4 tensor of doubles, row-major in batch, height, width,
/// channels order. Tensors behave as values: every operation returns a
/// fresh tensor and never mutates its inputs.
class Tensor {
public:
    Tensor() = default;

    /// Zero-filled tensor. All dimensions must be >= 1.
    explicit Tensor(Shape shape);

    static Tensor zeros(Shape shape);

    /// I.i.d. normal(0, stddev^2) entries; consumes exactly count() normal
    /// draws from the stream.
    static Tensor gaussian(Shape shape, double stddev, Rng& rng);

    const Shape& shape() const { return shape_; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }

    double& at(int b, int y, int x, int c) {
        return data_[offset(b, y, x, c)];
    }
    double at(int b, int y, int x, int c) const {
        return data_[offset(b, y, x, c)];
    }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool all_finite() const;

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::size_t offset(int b, int y, int x, int c) const {
        return ((static_cast<std::size_t>(b) * shape_.height + y) * shape_.width + x) *
                   shape_.channels +
               c;
    }

    Shape shape_{0, 0, 0, 0};
    std::vector<double> data_;
};

enum class Axis { Width, Channels, Features };

/// Contiguous copy of columns [lo, hi); other dimensions unchanged.
Tensor slice_width(const Tensor& t, int lo, int hi);

/// Concatenate parts (argument order preserved) along the given axis.
/// Axis::Features flattens each part first, so inputs only need matching
/// batch sizes.
Tensor concat(const std::vector<Tensor>& parts, Axis axis);

/// Row-major flattening of (height, width, channels) per batch element;
/// result has shape (batch, 1, 1, h*w*c).
Tensor flatten(const Tensor& t);

/// Inverse of flatten for a known target shape.
Tensor reshape(const Tensor& t, Shape shape);

/// Non-owning row-major matrix view.
struct MatView {
    const double* data = nullptr;
    int rows = 0;
    int cols = 0;
};

/// Owning row-major matrix; the handful of 2-D shapes the engine needs
/// (im2col patches, weight matrices, per-batch feature rows).
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    MatView view() const { return {data.data(), rows, cols}; }
    bool operator==(const Matrix&) const = default;
};

/// C = A * B with a fixed accumulation order (ascending inner index per
/// output element) so repeated runs are bit-identical.
Matrix matmul(MatView a, MatView b);

/// matmul writing into caller storage; out.size() must equal a.rows*b.cols.
void matmul_into(MatView a, MatView b, std::span<double> out);

} // namespace bcnn
