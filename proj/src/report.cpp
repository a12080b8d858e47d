#include "teesim/report.hpp"

#include <cinttypes>
#include <cstdio>
#include <sstream>

#include "teesim/errors.hpp"

namespace teesim {

namespace {

constexpr const char* kColumns =
    "layer,type,scheme,partitions,status,input_bytes,weights_bytes,im2col_bytes,output_bytes,"
    "footprint_bytes,faults,evictions,weight_faults,cost_units,link_units,checksum";

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::uint64_t fnv1a64(const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string checksum_hex(std::span<const float> values) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64,
                  fnv1a64(values.data(), values.size() * sizeof(float)));
    return buf;
}

std::string emit_report(const std::vector<LayerReport>& reports, ReportFormat format) {
    std::ostringstream os;
    if (format == ReportFormat::csv) {
        os << kColumns << '\n';
        for (const auto& r : reports) {
            os << r.index << ',' << r.type << ',' << r.scheme << ',' << r.partitions << ','
               << r.status << ',' << r.input_bytes << ',' << r.weights_bytes << ','
               << r.im2col_bytes << ',' << r.output_bytes << ',' << r.footprint_bytes << ','
               << r.faults << ',' << r.evictions << ',' << r.weight_faults << ','
               << fmt_double(r.cost_units) << ',' << fmt_double(r.link_units) << ',' << r.checksum
               << '\n';
        }
        return os.str();
    }
    os << "| layer | type | scheme | parts | status | input B | weights B | im2col B | output B "
          "| footprint B | faults | evictions | w-faults | cost | link | checksum |\n";
    os << "|---|---|---|---|---|---|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : reports) {
        os << "| " << r.index << " | " << r.type << " | " << r.scheme << " | " << r.partitions
           << " | " << r.status << " | " << r.input_bytes << " | " << r.weights_bytes << " | "
           << r.im2col_bytes << " | " << r.output_bytes << " | " << r.footprint_bytes << " | "
           << r.faults << " | " << r.evictions << " | " << r.weight_faults << " | "
           << fmt_double(r.cost_units) << " | " << fmt_double(r.link_units) << " | " << r.checksum
           << " |\n";
    }
    return os.str();
}

std::vector<LayerReport> parse_csv_report(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kColumns) {
        throw ParseError("report: unexpected CSV header");
    }
    std::vector<LayerReport> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() != 16) throw ParseError("report: bad CSV row: " + line);
        LayerReport r;
        r.index = std::stoi(f[0]);
        r.type = f[1];
        r.scheme = f[2];
        r.partitions = std::stoi(f[3]);
        r.status = f[4];
        r.input_bytes = std::stoull(f[5]);
        r.weights_bytes = std::stoull(f[6]);
        r.im2col_bytes = std::stoull(f[7]);
        r.output_bytes = std::stoull(f[8]);
        r.footprint_bytes = std::stoull(f[9]);
        r.faults = std::stoull(f[10]);
        r.evictions = std::stoull(f[11]);
        r.weight_faults = std::stoull(f[12]);
        r.cost_units = std::stod(f[13]);
        r.link_units = std::stod(f[14]);
        r.checksum = f[15];
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace teesim
