#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace teesim {

/// One row per layer; sizes come from the specs, never from measurement.
struct LayerReport {
    int index = 0; // 1-based
    std::string type;
    std::string scheme;  // unmodified | unpartitioned | yplane | channel | -
    int partitions = 0;
    std::string status = "ok"; // ok | infeasible
    std::uint64_t input_bytes = 0;
    std::uint64_t weights_bytes = 0;
    std::uint64_t im2col_bytes = 0;
    std::uint64_t output_bytes = 0;
    std::uint64_t footprint_bytes = 0;
    std::uint64_t faults = 0;
    std::uint64_t evictions = 0;
    std::uint64_t weight_faults = 0;
    double cost_units = 0.0; // paging cost delta
    double link_units = 0.0; // fc decode/link model, 0 for other layers
    std::string checksum;    // fnv1a of the layer output

    bool operator==(const LayerReport&) const = default;
};

enum class ReportFormat { csv, markdown };

std::string emit_report(const std::vector<LayerReport>& reports, ReportFormat format);

/// Parses emit_report's CSV output back; numeric fields round-trip exactly.
std::vector<LayerReport> parse_csv_report(const std::string& text);

std::uint64_t fnv1a64(const void* data, std::size_t bytes);
std::string checksum_hex(std::span<const float> values);

} // namespace teesim
