#include "bcnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "bcnn/error.hpp"

namespace bcnn {

std::string to_string(const Shape& shape) {
    return "(" + std::to_string(shape.batch) + ", " + std::to_string(shape.height) + ", " +
           std::to_string(shape.width) + ", " + std::to_string(shape.channels) + ")";
}

Tensor::Tensor(Shape shape) : shape_(shape) {
    if (shape.batch < 1 || shape.height < 1 || shape.width < 1 || shape.channels < 1) {
        throw ShapeError("tensor dimensions must all be >= 1, got " + to_string(shape));
    }
    data_.assign(static_cast<std::size_t>(shape.count()), 0.0);
}

Tensor Tensor::zeros(Shape shape) {
    return Tensor(shape);
}

Tensor Tensor::gaussian(Shape shape, double stddev, Rng& rng) {
    if (!(stddev > 0.0)) {
        throw ParamError("gaussian: stddev must be > 0");
    }
    Tensor t(shape);
    for (double& v : t.data_) {
        v = rng.normal(stddev);
    }
    return t;
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor slice_width(const Tensor& t, int lo, int hi) {
    const Shape& s = t.shape();
    if (lo < 0 || hi > s.width || lo >= hi) {
        throw BoundsError("slice_width: range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          ") invalid for width " + std::to_string(s.width));
    }
    Tensor out(Shape{s.batch, s.height, hi - lo, s.channels});
    const std::size_t row = static_cast<std::size_t>(s.width) * s.channels;
    const std::size_t out_row = static_cast<std::size_t>(hi - lo) * s.channels;
    const double* src = t.data().data();
    double* dst = out.data().data();
    const std::size_t rows = static_cast<std::size_t>(s.batch) * s.height;
    for (std::size_t r = 0; r < rows; ++r) {
        std::memcpy(dst + r * out_row, src + r * row + static_cast<std::size_t>(lo) * s.channels,
                    out_row * sizeof(double));
    }
    return out;
}

namespace {

void check_concat_dims(const Shape& a, const Shape& b, Axis axis) {
    const bool ok = axis == Axis::Width
                        ? a.batch == b.batch && a.height == b.height && a.channels == b.channels
                    : axis == Axis::Channels
                        ? a.batch == b.batch && a.height == b.height && a.width == b.width
                        : a.batch == b.batch;
    if (!ok) {
        throw ShapeError("concat: incompatible shapes " + to_string(a) + " and " + to_string(b));
    }
}

} // namespace

Tensor concat(const std::vector<Tensor>& parts, Axis axis) {
    if (parts.empty()) {
        throw ParamError("concat: empty part list");
    }
    if (axis == Axis::Features) {
        std::vector<Tensor> flat;
        flat.reserve(parts.size());
        for (const Tensor& p : parts) {
            flat.push_back(flatten(p));
        }
        return concat(flat, Axis::Channels);
    }
    const Shape& first = parts.front().shape();
    int total = 0;
    for (const Tensor& p : parts) {
        check_concat_dims(first, p.shape(), axis);
        total += axis == Axis::Width ? p.shape().width : p.shape().channels;
    }
    Shape out_shape = first;
    (axis == Axis::Width ? out_shape.width : out_shape.channels) = total;
    Tensor out(out_shape);
    double* dst = out.data().data();

    if (axis == Axis::Width) {
        const std::size_t rows = static_cast<std::size_t>(first.batch) * first.height;
        const std::size_t out_row = static_cast<std::size_t>(total) * first.channels;
        std::size_t col_offset = 0;
        for (const Tensor& p : parts) {
            const std::size_t part_row = static_cast<std::size_t>(p.shape().width) * first.channels;
            const double* src = p.data().data();
            for (std::size_t r = 0; r < rows; ++r) {
                std::memcpy(dst + r * out_row + col_offset, src + r * part_row,
                            part_row * sizeof(double));
            }
            col_offset += part_row;
        }
    } else {
        const std::size_t cells =
            static_cast<std::size_t>(first.batch) * first.height * first.width;
        std::size_t ch_offset = 0;
        for (const Tensor& p : parts) {
            const std::size_t part_ch = static_cast<std::size_t>(p.shape().channels);
            const double* src = p.data().data();
            for (std::size_t cell = 0; cell < cells; ++cell) {
                std::memcpy(dst + cell * total + ch_offset, src + cell * part_ch,
                            part_ch * sizeof(double));
            }
            ch_offset += part_ch;
        }
    }
    return out;
}

Tensor flatten(const Tensor& t) {
    const Shape& s = t.shape();
    Tensor out(Shape{s.batch, 1, 1, s.height * s.width * s.channels});
    std::copy(t.data().begin(), t.data().end(), out.data().begin());
    return out;
}

Tensor reshape(const Tensor& t, Shape shape) {
    if (shape.count() != t.size()) {
        throw ShapeError("reshape: element count mismatch, " + to_string(t.shape()) + " -> " +
                         to_string(shape));
    }
    Tensor out(shape);
    std::copy(t.data().begin(), t.data().end(), out.data().begin());
    return out;
}

void matmul_into(MatView a, MatView b, std::span<double> out) {
    if (a.cols != b.rows) {
        throw ShapeError("matmul: inner dimensions disagree, " + std::to_string(a.cols) +
                         " vs " + std::to_string(b.rows));
    }
    const std::size_t expected = static_cast<std::size_t>(a.rows) * b.cols;
    if (out.size() != expected) {
        throw ShapeError("matmul: output buffer has wrong size");
    }
    std::fill(out.begin(), out.end(), 0.0);
    // i-k-j loop: each output element accumulates over k in ascending order,
    // which pins the floating point result while letting the j loop vectorize.
    for (int i = 0; i < a.rows; ++i) {
        double* out_row = out.data() + static_cast<std::size_t>(i) * b.cols;
        const double* a_row = a.data + static_cast<std::size_t>(i) * a.cols;
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a_row[k];
            const double* b_row = b.data + static_cast<std::size_t>(k) * b.cols;
            for (int j = 0; j < b.cols; ++j) {
                out_row[j] += aik * b_row[j];
            }
        }
    }
}

Matrix matmul(MatView a, MatView b) {
    Matrix c(a.rows, b.cols);
    matmul_into(a, b, c.data);
    return c;
}

} // namespace bcnn
