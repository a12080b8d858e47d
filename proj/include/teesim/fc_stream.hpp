#pragma once

#include <span>

#include "teesim/codec.hpp"
#include "teesim/enclave.hpp"
#include "teesim/layers.hpp"

namespace teesim {

/// Analytic decode throughput per worker, in pages per cost-unit. raw32 is a
/// copy and never the bottleneck; dequantization keeps up with the link at
/// two workers; decompression needs six.
struct DecodeCostModel {
    double raw32_pages_per_unit_per_worker = 1e30;
    double fp16_pages_per_unit_per_worker = 0.5;
    double lossy_pages_per_unit_per_worker = 1.0 / 6.0;

    double rate_for(Codec c) const {
        switch (c) {
            case Codec::raw32: return raw32_pages_per_unit_per_worker;
            case Codec::fp16: return fp16_pages_per_unit_per_worker;
            case Codec::lossy: return lossy_pages_per_unit_per_worker;
        }
        return raw32_pages_per_unit_per_worker;
    }
};

struct FcBuffers {
    BufferHandle input;
    BufferHandle weights; // the encoded stream: headers ++ payload
    BufferHandle bias;
    BufferHandle output;
};

struct FcStreamResult {
    std::vector<float> output;
    PagingStats stats_delta;
    std::uint64_t weight_pages_faulted = 0;
    double link_units = 0.0; // link_time over the streamed weight pages
};

/// Fully-connected layer with the weights streamed through the enclave one
/// encoded chunk at a time: each weight page is faulted in exactly once,
/// decoded, consumed, and never revisited. Numerics match fc_direct on the
/// decoded weights (bit-identical for raw32).
FcStreamResult fc_streamed(std::span<const float> input, const WeightBlob& blob,
                           const FcLayerSpec& spec, std::span<const float> bias, Enclave& enclave,
                           const FcBuffers& bufs, int workers,
                           const DecodeCostModel& cost = DecodeCostModel{});

} // namespace teesim
