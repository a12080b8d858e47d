#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "teesim/errors.hpp"

namespace teesim {

enum class Codec : std::uint8_t { raw32 = 0, fp16 = 1, lossy = 2 };
const char* codec_name(Codec c);

/// IEEE 754 binary16 conversion, round-to-nearest-even, subnormals included.
/// Overflow produces infinity; quantize_fp16 clamps before converting.
std::uint16_t float_to_half(float f);
float half_to_float(std::uint16_t h);

/// Per-block reconstruction parameters of the lossy codec:
/// value = min + code * scale, scale = (max-min)/(2^b - 1), 0 for constant
/// blocks.
struct BlockHeader {
    float min = 0.0f;
    float scale = 0.0f;
};

/// Encoded weights. Payload layout by codec:
///   raw32  4 bytes/value, little-endian float32
///   fp16   2 bytes/value, little-endian binary16
///   lossy  b-bit codes packed LSB-first, one block of `block_size` values
///          per header; blocks are byte-aligned (block_size is a multiple
///          of 8)
struct WeightBlob {
    Codec codec = Codec::raw32;
    int bits_per_value = 0; // lossy only, 2..10
    std::uint64_t element_count = 0;
    std::uint32_t block_size = 0; // lossy only
    std::vector<BlockHeader> headers;
    std::vector<std::uint8_t> payload;

    std::uint64_t payload_bytes() const { return payload.size(); }
    std::uint64_t header_bytes() const { return headers.size() * sizeof(BlockHeader); }
    /// Bytes that travel through the decryption link: headers ++ payload.
    std::uint64_t stream_bytes() const { return header_bytes() + payload_bytes(); }
    std::uint64_t pages(std::uint64_t page_bytes) const {
        return (stream_bytes() + page_bytes - 1) / page_bytes;
    }
    std::uint64_t raw_bytes() const { return element_count * sizeof(float); }

    std::uint64_t block_count() const;
    /// Elements [first, first+count) covered by block `i` and its byte range
    /// within the payload.
    void block_extent(std::uint64_t i, std::uint64_t& first, std::uint64_t& count,
                      std::uint64_t& byte_off, std::uint64_t& byte_len) const;
};

WeightBlob encode_raw32(std::span<const float> values);
std::vector<float> decode_raw32(const WeightBlob& blob);

struct Fp16Report {
    std::uint64_t clamped = 0; // values outside +-65504, clamped in
};
WeightBlob quantize_fp16(std::span<const float> values, Fp16Report* report = nullptr);
std::vector<float> dequantize_fp16(const WeightBlob& blob);

inline constexpr int kLossyMinBits = 2;
inline constexpr int kLossyMaxBits = 10;
inline constexpr std::uint32_t kDefaultBlockSize = 1024;

WeightBlob compress_lossy(std::span<const float> values, int bits_per_value,
                          std::uint32_t block_size = kDefaultBlockSize);
std::vector<float> decompress(const WeightBlob& blob);

/// Decode any codec.
std::vector<float> decode(const WeightBlob& blob);
/// Decode one block/chunk into `out` (at least block-span many floats);
/// returns the element count. Raw32/fp16 use block_extent's chunking too.
std::uint64_t decode_block(const WeightBlob& blob, std::uint64_t block, float* out);

struct CodecReport {
    double payload_ratio = 1.0; // raw bytes / payload bytes (exactly 32/b for lossy)
    double total_ratio = 1.0;   // raw bytes / (payload + headers)
    float max_abs_error = 0.0f;
    std::uint64_t clamped = 0;
    std::uint64_t pages_required = 0;
};
CodecReport codec_report(const WeightBlob& blob, std::span<const float> original,
                         std::uint64_t page_bytes);

/// Little-endian container: magic "TSWB", u8 version(1), u8 codec, u8 bits,
/// u8 reserved, u64 element_count, u32 block_size, u32 block_count, then
/// block headers (f32 min, f32 scale each) and the packed payload.
void write_blob(std::ostream& os, const WeightBlob& blob);
WeightBlob read_blob(std::istream& is);

} // namespace teesim
