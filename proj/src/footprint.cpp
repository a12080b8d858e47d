#include "teesim/footprint.hpp"

#include <algorithm>

namespace teesim {

ConvSizes ConvSizes::of(const ConvLayerSpec& spec, int in_h, int in_w) {
    spec.validate();
    ConvSizes s;
    s.in_h = in_h;
    s.in_w = in_w;
    s.out_h = spec.out_dim(in_h);
    s.out_w = spec.out_dim(in_w);
    const std::uint64_t f = sizeof(float);
    s.input_bytes = static_cast<std::uint64_t>(spec.in_channels) * in_h * in_w * f;
    s.weight_bytes = static_cast<std::uint64_t>(spec.weight_count()) * f;
    s.bias_bytes = spec.has_bias ? static_cast<std::uint64_t>(spec.out_channels) * f : 0;
    s.output_bytes = static_cast<std::uint64_t>(spec.out_channels) * s.out_h * s.out_w * f;
    s.im2col_bytes = static_cast<std::uint64_t>(spec.in_channels) * spec.kernel * spec.kernel *
                     s.out_h * s.out_w * f;
    return s;
}

std::uint64_t footprint_overhead(std::uint64_t page_bytes) {
    return 3 * page_bytes;
}

std::uint64_t yplane_footprint(const ConvLayerSpec& spec, int in_h, int in_w,
                               int rows_per_partition, std::uint64_t page_bytes) {
    const ConvSizes s = ConvSizes::of(spec, in_h, in_w);
    const int rows = std::min(rows_per_partition, s.out_h);
    const std::uint64_t cols = static_cast<std::uint64_t>(rows) * s.out_w;
    const std::uint64_t im2col_part =
        static_cast<std::uint64_t>(spec.in_channels) * spec.kernel * spec.kernel * cols *
        sizeof(float);
    const std::uint64_t out_part =
        static_cast<std::uint64_t>(spec.out_channels) * cols * sizeof(float);
    return s.weight_bytes + im2col_part + out_part + footprint_overhead(page_bytes);
}

std::uint64_t channel_footprint(const ConvLayerSpec& spec, int in_h, int in_w,
                                int channels_per_group, std::uint64_t page_bytes) {
    const ConvSizes s = ConvSizes::of(spec, in_h, in_w);
    const int group = std::min(channels_per_group, spec.in_channels);
    const std::uint64_t cols = static_cast<std::uint64_t>(s.out_h) * s.out_w;
    const std::uint64_t im2col_group =
        static_cast<std::uint64_t>(group) * spec.kernel * spec.kernel * cols * sizeof(float);
    const std::uint64_t slice = static_cast<std::uint64_t>(spec.out_channels) * group *
                                spec.kernel * spec.kernel * sizeof(float);
    return s.output_bytes + im2col_group + slice + footprint_overhead(page_bytes);
}

std::uint64_t unpartitioned_footprint(const ConvLayerSpec& spec, int in_h, int in_w,
                                      std::uint64_t page_bytes) {
    const ConvSizes s = ConvSizes::of(spec, in_h, in_w);
    return s.weight_bytes + s.im2col_bytes + s.output_bytes + footprint_overhead(page_bytes);
}

} // namespace teesim
