#include <doctest.h>


#include "oracles.hpp"
#include "teesim/fc_stream.hpp"
#include "teesim/reference.hpp"
#include "teesim/rng.hpp"

using namespace teesim;
using namespace teesim::testing;

namespace {

struct FcFixture {
    FcLayerSpec spec{2048, 64, true};
    std::vector<float> weights;
    std::vector<float> bias;
    std::vector<float> input;

    FcFixture() {
        Rng rng(60);
        weights.resize(static_cast<std::size_t>(spec.weight_count()));
        for (auto& v : weights) v = rng.next_float(-1, 1);
        bias.resize(static_cast<std::size_t>(spec.out_features));
        for (auto& v : bias) v = rng.next_float(-1, 1);
        input.resize(static_cast<std::size_t>(spec.in_features));
        for (auto& v : input) v = rng.next_float(-1, 1);
    }
};

FcStreamResult run(const FcFixture& fx, const WeightBlob& blob, Enclave& enc, int workers = 1) {
    FcBuffers bufs;
    bufs.input = enc.alloc(fx.input.size() * 4, "in");
    bufs.weights = enc.alloc(blob.stream_bytes(), "w");
    bufs.bias = enc.alloc(fx.bias.size() * 4, "b");
    bufs.output = enc.alloc(fx.spec.out_features * 4, "out");
    return fc_streamed(fx.input, blob, fx.spec, fx.bias, enc, bufs, workers);
}

Enclave fresh_enclave() {
    return Enclave(EnclaveConfig{1 << 20, 4096, 1.0, 1.0, 1.0});
}

} // namespace

TEST_CASE("fc_streamed raw32 is bit-identical to fc_direct") {
    FcFixture fx;
    auto enc = fresh_enclave();
    const auto res = run(fx, encode_raw32(fx.weights), enc);
    const auto want = fc_direct(fx.input, fx.weights, fx.bias, fx.spec);
    CHECK(res.output == want);
}

TEST_CASE("fc_streamed weight faults equal the blob's page count, each page once") {
    FcFixture fx;
    for (const auto& blob : {encode_raw32(fx.weights), quantize_fp16(fx.weights),
                             compress_lossy(fx.weights, 5)}) {
        auto enc = fresh_enclave();
        const auto res = run(fx, blob, enc);
        // every distinct page must fault at least once, so equality with the
        // page count means no page faulted twice: a single streaming pass
        CHECK(res.weight_pages_faulted == blob.pages(4096));
    }
    auto enc = fresh_enclave();
    CHECK(run(fx, encode_raw32(fx.weights), enc).weight_pages_faulted == 128);
}

TEST_CASE("fp16 streaming halves the weight-page faults") {
    FcFixture fx;
    auto e1 = fresh_enclave();
    const auto raw = run(fx, encode_raw32(fx.weights), e1);
    auto e2 = fresh_enclave();
    const auto fp16 = run(fx, quantize_fp16(fx.weights), e2);
    const auto half = (raw.weight_pages_faulted + 1) / 2;
    CHECK(fp16.weight_pages_faulted >= half - 1);
    CHECK(fp16.weight_pages_faulted <= half + 1);

    // numerics match fc_direct on the dequantized weights
    const auto decoded = dequantize_fp16(quantize_fp16(fx.weights));
    const auto want = fc_direct(fx.input, decoded, fx.bias, fx.spec);
    CHECK(max_rel_diff(fp16.output, want) <= 1e-5);
}

TEST_CASE("lossy b=5 streams roughly 16 percent of the raw pages") {
    FcFixture fx;
    auto e1 = fresh_enclave();
    const auto raw = run(fx, encode_raw32(fx.weights), e1);
    auto e2 = fresh_enclave();
    const auto lossy = run(fx, compress_lossy(fx.weights, 5), e2);
    const double frac = static_cast<double>(lossy.weight_pages_faulted) /
                        static_cast<double>(raw.weight_pages_faulted);
    CHECK(frac >= 0.15);
    CHECK(frac <= 0.18);

    const auto decoded = decompress(compress_lossy(fx.weights, 5));
    const auto want = fc_direct(fx.input, decoded, fx.bias, fx.spec);
    CHECK(max_rel_diff(lossy.output, want) <= 1e-5);
}

TEST_CASE("worker count moves the link cost only until the link saturates") {
    FcFixture fx;
    const auto blob = quantize_fp16(fx.weights); // decode rate = link/2 by default
    auto e1 = fresh_enclave();
    const auto w1 = run(fx, blob, e1, 1);
    auto e2 = fresh_enclave();
    const auto w2 = run(fx, blob, e2, 2);
    auto e8 = fresh_enclave();
    const auto w8 = run(fx, blob, e8, 8);
    CHECK(w1.link_units == 2.0 * w2.link_units);
    CHECK(w2.link_units == w8.link_units);
    CHECK(w2.link_units == static_cast<double>(w2.weight_pages_faulted)); // link-bound
}

TEST_CASE("fc_streamed validates shapes and buffers") {
    FcFixture fx;
    auto enc = fresh_enclave();
    const auto blob = encode_raw32(fx.weights);

    FcBuffers bufs;
    bufs.input = enc.alloc(fx.input.size() * 4, "in");
    bufs.weights = enc.alloc(blob.stream_bytes() - 1, "w"); // too small
    bufs.bias = enc.alloc(fx.bias.size() * 4, "b");
    bufs.output = enc.alloc(fx.spec.out_features * 4, "out");
    CHECK_THROWS_AS(fc_streamed(fx.input, blob, fx.spec, fx.bias, enc, bufs, 1), ShapeError);

    FcLayerSpec wrong{2048, 63, true};
    CHECK_THROWS_AS(fc_streamed(fx.input, blob, wrong, fx.bias, enc, bufs, 1), ShapeError);
    CHECK_THROWS_AS(fc_streamed(fx.input, blob, fx.spec, fx.bias, enc, bufs, 0), Error);
}

TEST_CASE("streamed lossy output is deterministic across runs") {
    FcFixture fx;
    const auto blob = compress_lossy(fx.weights, 4);
    auto e1 = fresh_enclave();
    auto e2 = fresh_enclave();
    const auto r1 = run(fx, blob, e1);
    const auto r2 = run(fx, blob, e2);
    CHECK(r1.output == r2.output);
    CHECK(r1.weight_pages_faulted == r2.weight_pages_faulted);
}
