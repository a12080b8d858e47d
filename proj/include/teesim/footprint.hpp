#pragma once

#include <cstdint>

#include "teesim/layers.hpp"

namespace teesim {

/// Static byte sizes of one conv layer at a given input resolution. All
/// planner and report numbers come from these formulas, never measurement.
struct ConvSizes {
    int in_h = 0, in_w = 0, out_h = 0, out_w = 0;
    std::uint64_t input_bytes = 0;
    std::uint64_t weight_bytes = 0;
    std::uint64_t bias_bytes = 0;
    std::uint64_t output_bytes = 0;
    std::uint64_t im2col_bytes = 0; // full expansion

    static ConvSizes of(const ConvLayerSpec& spec, int in_h, int in_w);
};

/// Bias, loop state and one staging page: one page per buffer.
std::uint64_t footprint_overhead(std::uint64_t page_bytes);

/// Per-round resident set of y-plane partitioning with at most
/// `rows_per_partition` output rows per round: full weights + partition
/// im2col + partition output + overhead.
std::uint64_t yplane_footprint(const ConvLayerSpec& spec, int in_h, int in_w,
                               int rows_per_partition, std::uint64_t page_bytes);

/// Per-round resident set of channel partitioning with at most
/// `channels_per_group` input channels per round: full output + group im2col
/// + group weight slice + overhead. The output stays resident because every
/// round accumulates into it.
std::uint64_t channel_footprint(const ConvLayerSpec& spec, int in_h, int in_w,
                                int channels_per_group, std::uint64_t page_bytes);

/// Everything at once: weights + full im2col + full output + overhead.
std::uint64_t unpartitioned_footprint(const ConvLayerSpec& spec, int in_h, int in_w,
                                      std::uint64_t page_bytes);

} // namespace teesim
