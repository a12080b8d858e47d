#pragma once

#include <cstdint>
#include <vector>

#include "teesim/errors.hpp"

namespace teesim {

/// Dense row-major float32 matrix.
struct Matrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<float> data;

    Matrix() = default;
    Matrix(std::int64_t r, std::int64_t c)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0f) {
        if (r < 1 || c < 1) throw ShapeError("matrix dims must be positive");
    }

    float at(std::int64_t r, std::int64_t c) const {
        return data[static_cast<std::size_t>(r) * cols + c];
    }
    float& at(std::int64_t r, std::int64_t c) {
        return data[static_cast<std::size_t>(r) * cols + c];
    }
    std::uint64_t bytes() const { return static_cast<std::uint64_t>(data.size()) * sizeof(float); }
};

/// Read-only window into row-major storage; `stride` is the element distance
/// between rows, so sub-blocks of larger buffers (output row bands, weight
/// slices) can feed the kernels without copying.
struct MatView {
    const float* data = nullptr;
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::int64_t stride = 0;

    static MatView of(const Matrix& m) { return {m.data.data(), m.rows, m.cols, m.cols}; }
    float at(std::int64_t r, std::int64_t c) const {
        return data[static_cast<std::size_t>(r) * stride + c];
    }
};

struct MutMatView {
    float* data = nullptr;
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::int64_t stride = 0;

    static MutMatView of(Matrix& m) { return {m.data.data(), m.rows, m.cols, m.cols}; }
    float at(std::int64_t r, std::int64_t c) const {
        return data[static_cast<std::size_t>(r) * stride + c];
    }
    float& at(std::int64_t r, std::int64_t c) {
        return data[static_cast<std::size_t>(r) * stride + c];
    }
};

} // namespace teesim
