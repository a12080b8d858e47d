#include "teesim/executors.hpp"

#include <algorithm>
#include <string>

namespace teesim {

namespace {

void check_conv_args(const Tensor3D& input, std::span<const float> weights,
                     std::span<const float> bias, const ConvLayerSpec& spec) {
    spec.validate();
    if (input.channels != spec.in_channels) {
        throw ShapeError("conv: input has " + std::to_string(input.channels) +
                         " channels, spec expects " + std::to_string(spec.in_channels));
    }
    if (static_cast<std::int64_t>(weights.size()) != spec.weight_count()) {
        throw ShapeError("conv: weight array has " + std::to_string(weights.size()) +
                         " values, spec needs " + std::to_string(spec.weight_count()));
    }
    if (spec.has_bias && static_cast<int>(bias.size()) != spec.out_channels) {
        throw ShapeError("conv: bias has " + std::to_string(bias.size()) + " values, spec needs " +
                         std::to_string(spec.out_channels));
    }
}

// Writes bias (or zero) into output rows [y_lo, y_hi) of every channel and
// issues the matching traced writes.
void init_output_rows(Tensor3D& out, std::span<const float> bias, bool has_bias, int y_lo, int y_hi,
                      AccessSink* sink, const ConvBuffers* bufs) {
    const std::int64_t plane = static_cast<std::int64_t>(out.height) * out.width;
    const std::int64_t seg = static_cast<std::int64_t>(y_hi - y_lo) * out.width;
    if (sink && has_bias) {
        sink->read(bufs->bias, 0, bias.size() * sizeof(float));
    }
    for (int n = 0; n < out.channels; ++n) {
        const float b = has_bias ? bias[n] : 0.0f;
        float* dst = out.data.data() + n * plane + static_cast<std::int64_t>(y_lo) * out.width;
        std::fill(dst, dst + seg, b);
        if (sink) {
            sink->write(bufs->output,
                        (n * plane + static_cast<std::uint64_t>(y_lo) * out.width) * sizeof(float),
                        static_cast<std::uint64_t>(seg) * sizeof(float));
        }
    }
}

} // namespace

Tensor3D conv2d_im2col(const Tensor3D& input, std::span<const float> weights,
                       std::span<const float> bias, const ConvLayerSpec& spec, AccessSink* sink,
                       const ConvBuffers* bufs, bool row_order_gemm, int threads) {
    check_conv_args(input, weights, bias, spec);
    const auto layout = Im2colLayout::for_conv(spec, input.height, input.width);

    Matrix cols(layout.rows(), layout.cols());
    im2col_fill(input, spec, 0, layout.out_h, 0, spec.in_channels, cols, sink,
                bufs ? &bufs->input : nullptr, bufs ? &bufs->im2col : nullptr);

    Tensor3D out(spec.out_channels, layout.out_h, layout.out_w);
    init_output_rows(out, bias, spec.has_bias, 0, layout.out_h, sink, bufs);

    const MatView a{weights.data(), spec.out_channels, layout.rows(), layout.rows()};
    const MatView b = MatView::of(cols);
    const MutMatView c{out.data.data(), spec.out_channels, layout.cols(), layout.cols()};

    GemmTrace trace;
    if (sink) {
        trace.sink = sink;
        trace.a = {&bufs->weights, 0};
        trace.b = {&bufs->im2col, 0};
        trace.c = {&bufs->output, 0};
    }
    if (row_order_gemm) {
        gemm_row_order_traced(a, b, c, 1.0f, 1.0f, trace);
    } else {
        gemm(a, b, c, 1.0f, 1.0f, kGemmBlock, sink ? 1 : threads, sink ? &trace : nullptr);
    }
    return out;
}

Tensor3D conv2d_yplane(const Tensor3D& input, std::span<const float> weights,
                       std::span<const float> bias, const YPlanePlan& plan, AccessSink* sink,
                       const ConvBuffers* bufs, int threads) {
    check_conv_args(input, weights, bias, plan.spec);
    if (input.height != plan.in_h || input.width != plan.in_w) {
        throw ShapeError("conv_yplane: plan was made for " + std::to_string(plan.in_h) + "x" +
                         std::to_string(plan.in_w) + " input, got " +
                         std::to_string(input.height) + "x" + std::to_string(input.width));
    }
    const auto layout = Im2colLayout::for_conv(plan.spec, plan.in_h, plan.in_w);
    if (plan.out_ranges.empty() || plan.out_ranges.front().lo != 0 ||
        plan.out_ranges.back().hi != layout.out_h) {
        throw ShapeError("conv_yplane: plan does not cover the output rows");
    }

    Tensor3D out(plan.spec.out_channels, layout.out_h, layout.out_w);
    const std::int64_t plane = static_cast<std::int64_t>(layout.out_h) * layout.out_w;

    for (const auto& range : plan.out_ranges) {
        const std::int64_t seg_cols = static_cast<std::int64_t>(range.size()) * layout.out_w;
        Matrix cols(layout.rows(), seg_cols);
        im2col_fill(input, plan.spec, range.lo, range.hi, 0, plan.spec.in_channels, cols, sink,
                    bufs ? &bufs->input : nullptr, bufs ? &bufs->im2col : nullptr);
        init_output_rows(out, bias, plan.spec.has_bias, range.lo, range.hi, sink, bufs);

        const MatView a{weights.data(), plan.spec.out_channels, layout.rows(), layout.rows()};
        const MatView b = MatView::of(cols);
        const MutMatView c{out.data.data() + static_cast<std::int64_t>(range.lo) * layout.out_w,
                           plan.spec.out_channels, seg_cols, plane};
        GemmTrace trace;
        if (sink) {
            trace.sink = sink;
            trace.a = {&bufs->weights, 0};
            trace.b = {&bufs->im2col, 0};
            trace.c = {&bufs->output, static_cast<std::uint64_t>(range.lo) * layout.out_w};
        }
        gemm(a, b, c, 1.0f, 1.0f, kGemmBlock, sink ? 1 : threads, sink ? &trace : nullptr);
    }
    return out;
}

std::vector<float> pack_weights_by_group(std::span<const float> weights, const ChannelPlan& plan) {
    const int K = plan.spec.kernel, N = plan.spec.out_channels, C = plan.spec.in_channels;
    const int kk = K * K;
    std::vector<float> packed(weights.size());
    std::size_t at = 0;
    for (const auto& g : plan.groups) {
        for (int n = 0; n < N; ++n) {
            for (int c = g.lo; c < g.hi; ++c) {
                const float* src = weights.data() + (static_cast<std::size_t>(n) * C + c) * kk;
                std::copy(src, src + kk, packed.begin() + at);
                at += kk;
            }
        }
    }
    return packed;
}

Tensor3D conv2d_channel(const Tensor3D& input, std::span<const float> weights,
                        std::span<const float> bias, const ChannelPlan& plan, AccessSink* sink,
                        const ConvBuffers* bufs, int threads) {
    check_conv_args(input, weights, bias, plan.spec);
    if (input.height != plan.in_h || input.width != plan.in_w) {
        throw ShapeError("conv_channel: plan was made for " + std::to_string(plan.in_h) + "x" +
                         std::to_string(plan.in_w) + " input, got " +
                         std::to_string(input.height) + "x" + std::to_string(input.width));
    }
    if (plan.groups.empty() || plan.groups.front().lo != 0 ||
        plan.groups.back().hi != plan.spec.in_channels) {
        throw ShapeError("conv_channel: plan does not cover the input channels");
    }
    const auto layout = Im2colLayout::for_conv(plan.spec, plan.in_h, plan.in_w);
    const int kk = plan.spec.kernel * plan.spec.kernel;

    const std::vector<float> packed = pack_weights_by_group(weights, plan);

    Tensor3D out(plan.spec.out_channels, layout.out_h, layout.out_w);
    init_output_rows(out, bias, plan.spec.has_bias, 0, layout.out_h, sink, bufs);

    std::uint64_t slice_base = 0; // element offset of the group's packed block
    for (const auto& g : plan.groups) {
        const std::int64_t slice_cols = static_cast<std::int64_t>(g.size()) * kk;
        Matrix colsm(slice_cols, layout.cols());
        im2col_fill(input, plan.spec, 0, layout.out_h, g.lo, g.hi, colsm, sink,
                    bufs ? &bufs->input : nullptr, bufs ? &bufs->im2col : nullptr);

        const MatView a{packed.data() + slice_base, plan.spec.out_channels, slice_cols,
                        slice_cols};
        const MatView b = MatView::of(colsm);
        const MutMatView c{out.data.data(), plan.spec.out_channels, layout.cols(), layout.cols()};
        GemmTrace trace;
        if (sink) {
            trace.sink = sink;
            trace.a = {&bufs->weights, slice_base};
            trace.b = {&bufs->im2col, 0};
            trace.c = {&bufs->output, 0};
        }
        gemm(a, b, c, 1.0f, 1.0f, kGemmBlock, sink ? 1 : threads, sink ? &trace : nullptr);
        slice_base += static_cast<std::uint64_t>(plan.spec.out_channels) * slice_cols;
    }
    return out;
}

Tensor3D maxpool_traced(const Tensor3D& input, int window, int stride, AccessSink* sink,
                        const BufferHandle* in_buf, const BufferHandle* out_buf) {
    Tensor3D out = maxpool_direct(input, window, stride);
    if (sink) {
        for (int c = 0; c < input.channels; ++c) {
            for (int y = 0; y < out.height; ++y) {
                const int y_end = std::min(y * stride + window, input.height);
                for (int iy = y * stride; iy < y_end; ++iy) {
                    const int x_end = std::min((out.width - 1) * stride + window, input.width);
                    sink->read(*in_buf, input.index(c, iy, 0) * sizeof(float),
                               static_cast<std::uint64_t>(x_end) * sizeof(float));
                }
                sink->write(*out_buf, out.index(c, y, 0) * sizeof(float),
                            static_cast<std::uint64_t>(out.width) * sizeof(float));
            }
        }
    }
    return out;
}

} // namespace teesim
