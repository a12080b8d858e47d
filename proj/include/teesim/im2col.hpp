#pragma once

#include <cstdint>

#include "teesim/enclave.hpp"
#include "teesim/layers.hpp"
#include "teesim/matrix.hpp"
#include "teesim/tensor.hpp"

namespace teesim {

/// Geometry of the im2col expansion: row r of the matrix corresponds to one
/// (channel, ky, kx) kernel tap, column j to one output position.
struct Im2colLayout {
    int in_channels = 0;
    int kernel = 1;
    int stride = 1;
    int padding = 0;
    int in_h = 0;
    int in_w = 0;
    int out_h = 0;
    int out_w = 0;

    static Im2colLayout for_conv(const ConvLayerSpec& spec, int in_h, int in_w);

    std::int64_t rows() const {
        return static_cast<std::int64_t>(in_channels) * kernel * kernel;
    }
    std::int64_t cols() const { return static_cast<std::int64_t>(out_h) * out_w; }

    struct Coord {
        int c = 0;
        int y = 0;
        int x = 0;
        bool pad = false; // true when the tap falls in the zero padding
    };
    Coord map(std::int64_t row, std::int64_t col) const;

    /// rows*cols / (C*H*W); exactly K^2 * outH*outW / (H*W).
    double expansion_factor() const;
};

/// Materializes the full im2col matrix (C*K*K rows, outH*outW columns);
/// padded taps are zero.
Matrix im2col(const Tensor3D& input, const ConvLayerSpec& spec);

/// Fills `dst` with the im2col block covering output rows [y_lo, y_hi) and
/// input channels [c_lo, c_hi). dst must be (c_hi-c_lo)*K*K by
/// (y_hi-y_lo)*out_w. When `sink` is set, input reads and dst writes are
/// issued against the given buffers (dst rows written as contiguous runs, so
/// the whole block stays hot while it is produced).
void im2col_fill(const Tensor3D& input, const ConvLayerSpec& spec, int y_lo, int y_hi, int c_lo,
                 int c_hi, Matrix& dst, AccessSink* sink = nullptr,
                 const BufferHandle* input_buf = nullptr, const BufferHandle* dst_buf = nullptr);

} // namespace teesim
