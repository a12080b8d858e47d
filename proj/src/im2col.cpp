#include "teesim/im2col.hpp"

#include <algorithm>
#include <string>

namespace teesim {

Im2colLayout Im2colLayout::for_conv(const ConvLayerSpec& spec, int in_h, int in_w) {
    spec.validate();
    Im2colLayout l;
    l.in_channels = spec.in_channels;
    l.kernel = spec.kernel;
    l.stride = spec.stride;
    l.padding = spec.padding;
    l.in_h = in_h;
    l.in_w = in_w;
    l.out_h = spec.out_dim(in_h);
    l.out_w = spec.out_dim(in_w);
    return l;
}

Im2colLayout::Coord Im2colLayout::map(std::int64_t row, std::int64_t col) const {
    if (row < 0 || row >= rows() || col < 0 || col >= cols()) {
        throw ShapeError("im2col map: index (" + std::to_string(row) + "," + std::to_string(col) +
                         ") outside " + std::to_string(rows()) + "x" + std::to_string(cols()));
    }
    const int kk = kernel * kernel;
    Coord m;
    m.c = static_cast<int>(row / kk);
    const int rem = static_cast<int>(row % kk);
    const int ky = rem / kernel, kx = rem % kernel;
    const int oy = static_cast<int>(col / out_w), ox = static_cast<int>(col % out_w);
    m.y = oy * stride + ky - padding;
    m.x = ox * stride + kx - padding;
    m.pad = m.y < 0 || m.y >= in_h || m.x < 0 || m.x >= in_w;
    return m;
}

double Im2colLayout::expansion_factor() const {
    return static_cast<double>(rows()) * static_cast<double>(cols()) /
           (static_cast<double>(in_channels) * in_h * in_w);
}

Matrix im2col(const Tensor3D& input, const ConvLayerSpec& spec) {
    const auto layout = Im2colLayout::for_conv(spec, input.height, input.width);
    Matrix m(layout.rows(), layout.cols());
    im2col_fill(input, spec, 0, layout.out_h, 0, spec.in_channels, m);
    return m;
}

void im2col_fill(const Tensor3D& input, const ConvLayerSpec& spec, int y_lo, int y_hi, int c_lo,
                 int c_hi, Matrix& dst, AccessSink* sink, const BufferHandle* input_buf,
                 const BufferHandle* dst_buf) {
    const auto layout = Im2colLayout::for_conv(spec, input.height, input.width);
    if (input.channels != spec.in_channels) {
        throw ShapeError("im2col: input has " + std::to_string(input.channels) +
                         " channels, spec expects " + std::to_string(spec.in_channels));
    }
    if (y_lo < 0 || y_hi > layout.out_h || y_lo >= y_hi || c_lo < 0 || c_hi > spec.in_channels ||
        c_lo >= c_hi) {
        throw ShapeError("im2col: block [" + std::to_string(y_lo) + "," + std::to_string(y_hi) +
                         ")x[" + std::to_string(c_lo) + "," + std::to_string(c_hi) + ") invalid");
    }
    const int K = spec.kernel, S = spec.stride, P = spec.padding;
    const int W = input.width, H = input.height;
    const int out_w = layout.out_w;
    const std::int64_t want_rows = static_cast<std::int64_t>(c_hi - c_lo) * K * K;
    const std::int64_t want_cols = static_cast<std::int64_t>(y_hi - y_lo) * out_w;
    if (dst.rows != want_rows || dst.cols != want_cols) {
        throw ShapeError("im2col: dst is " + std::to_string(dst.rows) + "x" +
                         std::to_string(dst.cols) + ", block needs " + std::to_string(want_rows) +
                         "x" + std::to_string(want_cols));
    }

    for (int y = y_lo; y < y_hi; ++y) {
        const std::int64_t col_base = static_cast<std::int64_t>(y - y_lo) * out_w;
        for (int c = c_lo; c < c_hi; ++c) {
            for (int ky = 0; ky < K; ++ky) {
                const int iy = y * S + ky - P;
                const bool row_valid = iy >= 0 && iy < H;
                if (sink && row_valid) {
                    // one read covering every tap this (y, c, ky) consumes
                    const int lo_ix = std::max(0, -P);
                    const int hi_ix = std::min(W - 1, (out_w - 1) * S + K - 1 - P);
                    if (hi_ix >= lo_ix) {
                        sink->read(*input_buf, input.index(c, iy, lo_ix) * sizeof(float),
                                   static_cast<std::uint64_t>(hi_ix - lo_ix + 1) * sizeof(float));
                    }
                }
                for (int kx = 0; kx < K; ++kx) {
                    const std::int64_t r =
                        (static_cast<std::int64_t>(c - c_lo) * K + ky) * K + kx;
                    float* seg = dst.data.data() + static_cast<std::size_t>(r) * dst.cols + col_base;
                    if (!row_valid) {
                        std::fill(seg, seg + out_w, 0.0f);
                    } else {
                        for (int x = 0; x < out_w; ++x) {
                            const int ix = x * S + kx - P;
                            seg[x] = (ix >= 0 && ix < W) ? input.at(c, iy, ix) : 0.0f;
                        }
                    }
                    if (sink) {
                        sink->write(*dst_buf,
                                    (static_cast<std::uint64_t>(r) * dst.cols + col_base) *
                                        sizeof(float),
                                    static_cast<std::uint64_t>(out_w) * sizeof(float));
                    }
                }
            }
        }
    }
}

} // namespace teesim
