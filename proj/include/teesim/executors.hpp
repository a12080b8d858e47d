#pragma once

#include <span>

#include "teesim/enclave.hpp"
#include "teesim/gemm.hpp"
#include "teesim/im2col.hpp"
#include "teesim/partition.hpp"
#include "teesim/reference.hpp"

namespace teesim {

/// Simulated-memory locations of one conv execution's operands. `im2col` is
/// the staging buffer, sized for the largest partition in play.
struct ConvBuffers {
    BufferHandle input;
    BufferHandle weights;
    BufferHandle bias;
    BufferHandle output;
    BufferHandle im2col;
};

/// im2col + GEMM convolution over the whole layer at once. With
/// `row_order_gemm` the multiply walks the output row by row, re-reading the
/// entire im2col matrix per row (the unpartitioned baseline's pattern);
/// otherwise the blocked kernel runs. Results are bit-identical either way.
Tensor3D conv2d_im2col(const Tensor3D& input, std::span<const float> weights,
                       std::span<const float> bias, const ConvLayerSpec& spec,
                       AccessSink* sink = nullptr, const ConvBuffers* bufs = nullptr,
                       bool row_order_gemm = false, int threads = 1);

/// One round per output-row group: im2col the matching input rows, multiply
/// by the full weight array, write that group of output rows.
Tensor3D conv2d_yplane(const Tensor3D& input, std::span<const float> weights,
                       std::span<const float> bias, const YPlanePlan& plan,
                       AccessSink* sink = nullptr, const ConvBuffers* bufs = nullptr,
                       int threads = 1);

/// One round per input-channel group: im2col the group, multiply by the
/// group's weight slice, accumulate into the full output. Weights are
/// repacked group-major at entry (preprocessing, outside the trace) so each
/// round reads one contiguous slice; `bufs->weights` stands for the packed
/// copy.
Tensor3D conv2d_channel(const Tensor3D& input, std::span<const float> weights,
                        std::span<const float> bias, const ChannelPlan& plan,
                        AccessSink* sink = nullptr, const ConvBuffers* bufs = nullptr,
                        int threads = 1);

/// Weight slices of a channel plan, concatenated: for each group g, the
/// N x (G_g*K*K) row-major block. Total size equals the n-major array.
std::vector<float> pack_weights_by_group(std::span<const float> weights, const ChannelPlan& plan);

Tensor3D maxpool_traced(const Tensor3D& input, int window, int stride, AccessSink* sink,
                        const BufferHandle* in_buf, const BufferHandle* out_buf);

} // namespace teesim
