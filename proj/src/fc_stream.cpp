#include "teesim/fc_stream.hpp"

#include <algorithm>
#include <string>

namespace teesim {

FcStreamResult fc_streamed(std::span<const float> input, const WeightBlob& blob,
                           const FcLayerSpec& spec, std::span<const float> bias, Enclave& enclave,
                           const FcBuffers& bufs, int workers, const DecodeCostModel& cost) {
    spec.validate();
    if (workers < 1) throw Error("fc_streamed: workers must be >= 1");
    if (blob.element_count != static_cast<std::uint64_t>(spec.weight_count())) {
        throw ShapeError("fc_streamed: blob encodes " + std::to_string(blob.element_count) +
                         " weights, spec needs " + std::to_string(spec.weight_count()));
    }
    if (static_cast<int>(input.size()) != spec.in_features) {
        throw ShapeError("fc_streamed: input length " + std::to_string(input.size()) +
                         " != in_features " + std::to_string(spec.in_features));
    }
    if (spec.has_bias && static_cast<int>(bias.size()) != spec.out_features) {
        throw ShapeError("fc_streamed: bias has " + std::to_string(bias.size()) +
                         " values, spec needs " + std::to_string(spec.out_features));
    }
    if (bufs.weights.length != blob.stream_bytes()) {
        throw ShapeError("fc_streamed: weight buffer holds " + std::to_string(bufs.weights.length) +
                         " bytes, blob streams " + std::to_string(blob.stream_bytes()));
    }

    const PagingStats before = enclave.stats();
    const std::uint64_t weight_faults_before = enclave.faults_for(bufs.weights);

    FcStreamResult res;
    res.output.assign(static_cast<std::size_t>(spec.out_features), 0.0f);
    if (spec.has_bias) {
        enclave.read(bufs.bias, 0, bias.size() * sizeof(float));
        std::copy(bias.begin(), bias.end(), res.output.begin());
    }
    enclave.write(bufs.output, 0, res.output.size() * sizeof(float));

    const std::uint64_t in_n = static_cast<std::uint64_t>(spec.in_features);
    const std::uint64_t header_bytes = blob.header_bytes();
    std::vector<float> decoded(blob.block_size ? blob.block_size : kDefaultBlockSize);

    const std::uint64_t nblocks = blob.block_count();
    for (std::uint64_t blk = 0; blk < nblocks; ++blk) {
        std::uint64_t first, count, byte_off, byte_len;
        blob.block_extent(blk, first, count, byte_off, byte_len);
        if (blob.codec == Codec::lossy) {
            enclave.read(bufs.weights, blk * sizeof(BlockHeader), sizeof(BlockHeader));
        }
        enclave.read(bufs.weights, header_bytes + byte_off, byte_len);
        decode_block(blob, blk, decoded.data());

        // consume the decoded chunk; a chunk may span several output rows
        std::uint64_t t = 0;
        while (t < count) {
            const std::uint64_t e = first + t;
            const std::uint64_t o = e / in_n;
            const std::uint64_t i0 = e % in_n;
            const std::uint64_t run = std::min<std::uint64_t>(in_n - i0, count - t);
            enclave.read(bufs.input, i0 * sizeof(float), run * sizeof(float));
            enclave.read(bufs.output, o * sizeof(float), sizeof(float));
            float acc = res.output[o];
            for (std::uint64_t r = 0; r < run; ++r) {
                acc += decoded[t + r] * input[i0 + r];
            }
            res.output[o] = acc;
            enclave.write(bufs.output, o * sizeof(float), sizeof(float));
            t += run;
        }
    }

    res.stats_delta = enclave.stats().delta_since(before);
    res.weight_pages_faulted = enclave.faults_for(bufs.weights) - weight_faults_before;
    res.link_units = link_time(res.weight_pages_faulted, workers, cost.rate_for(blob.codec),
                               enclave.config().link_pages_per_unit);
    return res;
}

} // namespace teesim
