#include "teesim/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace teesim {

const char* codec_name(Codec c) {
    switch (c) {
        case Codec::raw32: return "raw32";
        case Codec::fp16: return "fp16";
        case Codec::lossy: return "lossy";
    }
    return "?";
}

std::uint16_t float_to_half(float f) {
    const std::uint32_t x = std::bit_cast<std::uint32_t>(f);
    const std::uint16_t sign = static_cast<std::uint16_t>((x >> 16) & 0x8000u);
    const std::uint32_t mag = x & 0x7fffffffu;

    if (mag >= 0x7f800000u) { // inf / nan
        return sign | (mag > 0x7f800000u ? 0x7e00u : 0x7c00u);
    }
    const int exp = static_cast<int>(mag >> 23) - 127;
    if (exp >= 16) return sign | 0x7c00u; // overflow to infinity
    std::uint32_t mant = (mag & 0x7fffffu) | 0x800000u;
    int shift = 13; // 23-bit -> 10-bit mantissa
    if (exp < -14) {
        shift += -14 - exp; // subnormal half
        if (shift > 24) return sign; // rounds to zero even with the sticky bit
    }
    const std::uint32_t kept = mant >> shift;
    const std::uint32_t round_bit = (mant >> (shift - 1)) & 1u;
    const std::uint32_t sticky = (mant & ((1u << (shift - 1)) - 1u)) != 0;
    std::uint32_t half_mant = kept + (round_bit & (sticky | (kept & 1u)));
    int half_exp = exp < -14 ? 0 : exp + 15;
    if (half_mant >= (exp < -14 ? 0x400u : 0x800u)) {
        // rounding overflowed the mantissa
        if (exp < -14) {
            half_exp = 1;
            half_mant = 0x400u;
        } else {
            half_exp += 1;
            half_mant >>= 1;
            if (half_exp >= 31) return sign | 0x7c00u;
        }
    }
    return static_cast<std::uint16_t>(sign | (half_exp << 10) | (half_mant & 0x3ffu));
}

float half_to_float(std::uint16_t h) {
    const std::uint32_t sign = static_cast<std::uint32_t>(h & 0x8000u) << 16;
    const std::uint32_t exp = (h >> 10) & 0x1fu;
    const std::uint32_t mant = h & 0x3ffu;
    std::uint32_t bits;
    if (exp == 0) {
        if (mant == 0) {
            bits = sign;
        } else {
            // subnormal: mant * 2^-24, exact as a float
            const float v = static_cast<float>(mant) * 0x1p-24f;
            return sign ? -v : v;
        }
    } else if (exp == 31) {
        bits = sign | 0x7f800000u | (mant << 13);
    } else {
        bits = sign | ((exp - 15 + 127) << 23) | (mant << 13);
    }
    return std::bit_cast<float>(bits);
}

std::uint64_t WeightBlob::block_count() const {
    if (codec != Codec::lossy) {
        const std::uint32_t chunk = block_size ? block_size : kDefaultBlockSize;
        return (element_count + chunk - 1) / chunk;
    }
    return headers.size();
}

void WeightBlob::block_extent(std::uint64_t i, std::uint64_t& first, std::uint64_t& count,
                              std::uint64_t& byte_off, std::uint64_t& byte_len) const {
    const std::uint32_t chunk = block_size ? block_size : kDefaultBlockSize;
    first = i * chunk;
    count = std::min<std::uint64_t>(chunk, element_count - first);
    switch (codec) {
        case Codec::raw32:
            byte_off = first * 4;
            byte_len = count * 4;
            break;
        case Codec::fp16:
            byte_off = first * 2;
            byte_len = count * 2;
            break;
        case Codec::lossy: {
            const std::uint64_t first_bit = first * bits_per_value;
            const std::uint64_t end_bit = (first + count) * bits_per_value;
            byte_off = first_bit / 8; // blocks are byte-aligned
            byte_len = (end_bit + 7) / 8 - byte_off;
            break;
        }
    }
}

WeightBlob encode_raw32(std::span<const float> values) {
    WeightBlob b;
    b.codec = Codec::raw32;
    b.element_count = values.size();
    b.block_size = kDefaultBlockSize;
    b.payload.resize(values.size() * 4);
    std::memcpy(b.payload.data(), values.data(), b.payload.size());
    return b;
}

std::vector<float> decode_raw32(const WeightBlob& blob) {
    if (blob.codec != Codec::raw32) throw CodecError("decode_raw32: blob is not raw32");
    if (blob.payload.size() != blob.element_count * 4) throw CodecError("raw32: truncated payload");
    std::vector<float> out(blob.element_count);
    std::memcpy(out.data(), blob.payload.data(), blob.payload.size());
    return out;
}

WeightBlob quantize_fp16(std::span<const float> values, Fp16Report* report) {
    constexpr float kHalfMax = 65504.0f;
    WeightBlob b;
    b.codec = Codec::fp16;
    b.element_count = values.size();
    b.block_size = kDefaultBlockSize;
    b.payload.resize(values.size() * 2);
    std::uint64_t clamped = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        float v = values[i];
        if (v > kHalfMax || v < -kHalfMax) {
            v = std::clamp(v, -kHalfMax, kHalfMax);
            ++clamped;
        }
        const std::uint16_t h = float_to_half(v);
        std::memcpy(b.payload.data() + i * 2, &h, 2);
    }
    if (report) report->clamped = clamped;
    return b;
}

std::vector<float> dequantize_fp16(const WeightBlob& blob) {
    if (blob.codec != Codec::fp16) throw CodecError("dequantize_fp16: blob is not fp16");
    if (blob.payload.size() != blob.element_count * 2) throw CodecError("fp16: truncated payload");
    std::vector<float> out(blob.element_count);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint16_t h;
        std::memcpy(&h, blob.payload.data() + i * 2, 2);
        out[i] = half_to_float(h);
    }
    return out;
}

namespace {

inline void pack_code(std::uint8_t* bytes, std::uint64_t bit_pos, std::uint32_t code, int bits) {
    while (bits > 0) {
        const std::uint64_t byte = bit_pos >> 3;
        const int off = static_cast<int>(bit_pos & 7);
        const int take = std::min(8 - off, bits);
        bytes[byte] = static_cast<std::uint8_t>(bytes[byte] | ((code & ((1u << take) - 1u)) << off));
        code >>= take;
        bit_pos += take;
        bits -= take;
    }
}

inline std::uint32_t unpack_code(const std::uint8_t* bytes, std::uint64_t bit_pos, int bits) {
    std::uint32_t code = 0;
    int got = 0;
    while (got < bits) {
        const std::uint64_t byte = bit_pos >> 3;
        const int off = static_cast<int>(bit_pos & 7);
        const int take = std::min(8 - off, bits - got);
        code |= ((bytes[byte] >> off) & ((1u << take) - 1u)) << got;
        bit_pos += take;
        got += take;
    }
    return code;
}

} // namespace

WeightBlob compress_lossy(std::span<const float> values, int bits_per_value,
                          std::uint32_t block_size) {
    if (bits_per_value < kLossyMinBits || bits_per_value > kLossyMaxBits) {
        throw CodecError("lossy: bits_per_value must be in [" + std::to_string(kLossyMinBits) +
                         "," + std::to_string(kLossyMaxBits) + "], got " +
                         std::to_string(bits_per_value));
    }
    if (block_size == 0 || block_size % 8 != 0) {
        throw CodecError("lossy: block_size must be a positive multiple of 8");
    }
    WeightBlob b;
    b.codec = Codec::lossy;
    b.bits_per_value = bits_per_value;
    b.element_count = values.size();
    b.block_size = block_size;
    const std::uint64_t nblocks = (values.size() + block_size - 1) / block_size;
    b.headers.resize(nblocks);
    b.payload.assign((values.size() * bits_per_value + 7) / 8, 0);

    const std::uint32_t levels = (1u << bits_per_value) - 1u;
    std::vector<std::uint32_t> codes(block_size);
    for (std::uint64_t blk = 0; blk < nblocks; ++blk) {
        const std::uint64_t first = blk * block_size;
        const std::uint64_t count = std::min<std::uint64_t>(block_size, values.size() - first);
        float lo = values[first], hi = values[first];
        for (std::uint64_t t = 1; t < count; ++t) {
            lo = std::min(lo, values[first + t]);
            hi = std::max(hi, values[first + t]);
        }
        if (hi <= lo) {
            b.headers[blk] = BlockHeader{lo, 0.0f}; // constant block, codes stay zero
            continue;
        }

        // Encode against the float values the decoder will emit. Because the
        // reconstructions are rounded to float, an element sitting almost
        // exactly mid-lattice can end up more than scale/2 from both
        // neighbours for one particular rounding of the scale; shifting the
        // stored scale by one ulp re-seats the lattice, so try the
        // neighbouring roundings of (hi-lo)/levels and keep the first that
        // meets the bound.
        const float nominal = (hi - lo) / static_cast<float>(levels);
        const double dlo = lo;
        float best_scale = nominal;
        double best_excess = std::numeric_limits<double>::infinity();
        std::vector<std::uint32_t> best_codes;
        // low codes barely move per ulp of scale, so the ladder reaches a
        // few ulps out in both directions
        std::vector<float> candidates{nominal};
        float up = nominal, down = nominal;
        for (int k = 0; k < 16; ++k) {
            up = std::nextafter(up, 2.0f * nominal);
            down = std::nextafter(down, 0.0f);
            candidates.push_back(up);
            candidates.push_back(down);
        }
        for (const float scale : candidates) {
            const double dscale = scale;
            const auto recon = [&](std::int64_t c) {
                return static_cast<float>(dlo + static_cast<double>(c) * dscale);
            };
            double excess = 0.0;
            for (std::uint64_t t = 0; t < count; ++t) {
                const double x = values[first + t];
                auto q = static_cast<std::int64_t>(std::llround((x - dlo) / dscale));
                q = std::clamp<std::int64_t>(q, 0, levels);
                double best = std::abs(x - recon(q));
                for (const std::int64_t cand : {q - 1, q + 1}) {
                    if (cand < 0 || cand > static_cast<std::int64_t>(levels)) continue;
                    const double err = std::abs(x - recon(cand));
                    if (err < best) {
                        best = err;
                        q = cand;
                    }
                }
                codes[t] = static_cast<std::uint32_t>(q);
                excess = std::max(excess, best - static_cast<double>(scale) / 2.0);
            }
            if (excess < best_excess) {
                best_excess = excess;
                best_scale = scale;
                best_codes.assign(codes.begin(), codes.begin() + count);
            }
            if (best_excess <= 0.0) break;
        }
        for (std::uint64_t t = 0; t < count; ++t) {
            pack_code(b.payload.data(), (first + t) * bits_per_value, best_codes[t],
                      bits_per_value);
        }
        b.headers[blk] = BlockHeader{lo, best_scale};
    }
    return b;
}

std::vector<float> decompress(const WeightBlob& blob) {
    if (blob.codec != Codec::lossy) throw CodecError("decompress: blob is not lossy");
    if (blob.bits_per_value < kLossyMinBits || blob.bits_per_value > kLossyMaxBits) {
        throw CodecError("lossy: bad bits_per_value " + std::to_string(blob.bits_per_value));
    }
    if (blob.payload.size() < (blob.element_count * blob.bits_per_value + 7) / 8) {
        throw CodecError("lossy: truncated payload");
    }
    const std::uint64_t nblocks = (blob.element_count + blob.block_size - 1) / blob.block_size;
    if (blob.headers.size() != nblocks) throw CodecError("lossy: header count mismatch");
    std::vector<float> out(blob.element_count);
    for (std::uint64_t blk = 0; blk < nblocks; ++blk) {
        decode_block(blob, blk, out.data() + blk * blob.block_size);
    }
    return out;
}

std::uint64_t decode_block(const WeightBlob& blob, std::uint64_t block, float* out) {
    std::uint64_t first, count, byte_off, byte_len;
    blob.block_extent(block, first, count, byte_off, byte_len);
    if (byte_off + byte_len > blob.payload.size()) throw CodecError("blob: truncated payload");
    switch (blob.codec) {
        case Codec::raw32:
            std::memcpy(out, blob.payload.data() + byte_off, count * 4);
            break;
        case Codec::fp16:
            for (std::uint64_t t = 0; t < count; ++t) {
                std::uint16_t h;
                std::memcpy(&h, blob.payload.data() + byte_off + t * 2, 2);
                out[t] = half_to_float(h);
            }
            break;
        case Codec::lossy: {
            const BlockHeader hd = blob.headers.at(block);
            const double dlo = hd.min, dscale = hd.scale;
            for (std::uint64_t t = 0; t < count; ++t) {
                const std::uint32_t code =
                    unpack_code(blob.payload.data(), (first + t) * blob.bits_per_value,
                                blob.bits_per_value);
                out[t] = static_cast<float>(dlo + static_cast<double>(code) * dscale);
            }
            break;
        }
    }
    return count;
}

std::vector<float> decode(const WeightBlob& blob) {
    switch (blob.codec) {
        case Codec::raw32: return decode_raw32(blob);
        case Codec::fp16: return dequantize_fp16(blob);
        case Codec::lossy: return decompress(blob);
    }
    throw CodecError("decode: unknown codec");
}

CodecReport codec_report(const WeightBlob& blob, std::span<const float> original,
                         std::uint64_t page_bytes) {
    if (original.size() != blob.element_count) {
        throw CodecError("codec_report: original has " + std::to_string(original.size()) +
                         " values, blob encodes " + std::to_string(blob.element_count));
    }
    CodecReport r;
    r.payload_ratio = static_cast<double>(blob.raw_bytes()) / blob.payload_bytes();
    r.total_ratio = static_cast<double>(blob.raw_bytes()) / blob.stream_bytes();
    r.pages_required = blob.pages(page_bytes);
    const auto decoded = decode(blob);
    float max_err = 0.0f;
    for (std::size_t i = 0; i < decoded.size(); ++i) {
        max_err = std::max(max_err, std::abs(decoded[i] - original[i]));
    }
    r.max_abs_error = max_err;
    return r;
}

namespace {

template <typename T>
void put(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little);
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw CodecError("blob: truncated file");
    return v;
}

} // namespace

void write_blob(std::ostream& os, const WeightBlob& blob) {
    os.write("TSWB", 4);
    put<std::uint8_t>(os, 1);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(blob.codec));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(blob.bits_per_value));
    put<std::uint8_t>(os, 0);
    put<std::uint64_t>(os, blob.element_count);
    put<std::uint32_t>(os, blob.block_size);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(blob.headers.size()));
    for (const auto& h : blob.headers) {
        put<float>(os, h.min);
        put<float>(os, h.scale);
    }
    os.write(reinterpret_cast<const char*>(blob.payload.data()),
             static_cast<std::streamsize>(blob.payload.size()));
}

WeightBlob read_blob(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "TSWB", 4) != 0) throw CodecError("blob: bad magic");
    const auto version = get<std::uint8_t>(is);
    if (version != 1) throw CodecError("blob: unsupported version " + std::to_string(version));
    WeightBlob b;
    const auto codec = get<std::uint8_t>(is);
    if (codec > 2) throw CodecError("blob: unknown codec tag " + std::to_string(codec));
    b.codec = static_cast<Codec>(codec);
    b.bits_per_value = get<std::uint8_t>(is);
    get<std::uint8_t>(is);
    b.element_count = get<std::uint64_t>(is);
    b.block_size = get<std::uint32_t>(is);
    const auto nheaders = get<std::uint32_t>(is);
    b.headers.resize(nheaders);
    for (auto& h : b.headers) {
        h.min = get<float>(is);
        h.scale = get<float>(is);
    }
    std::uint64_t payload_bytes = 0;
    switch (b.codec) {
        case Codec::raw32: payload_bytes = b.element_count * 4; break;
        case Codec::fp16: payload_bytes = b.element_count * 2; break;
        case Codec::lossy: payload_bytes = (b.element_count * b.bits_per_value + 7) / 8; break;
    }
    b.payload.resize(payload_bytes);
    is.read(reinterpret_cast<char*>(b.payload.data()), static_cast<std::streamsize>(payload_bytes));
    if (!is) throw CodecError("blob: truncated payload");
    return b;
}

} // namespace teesim
