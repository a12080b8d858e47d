#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "teesim/footprint.hpp"
#include "teesim/layers.hpp"

namespace teesim {

struct RowRange {
    int lo = 0;
    int hi = 0; // exclusive
    int size() const { return hi - lo; }
    bool operator==(const RowRange&) const = default;
};

/// Smallest input-row interval that suffices to compute output rows
/// [y_lo, y_hi) under zero padding:
/// [max(0, y_lo*S - P), min(H, (y_hi-1)*S - P + K)). May be empty when the
/// whole window falls in the padding.
RowRange yplane_input_range(int y_lo, int y_hi, const ConvLayerSpec& spec, int in_h);

/// Contiguous groups of output y-planes; each round computes one group from
/// its input rows and the full weight array.
struct YPlanePlan {
    ConvLayerSpec spec;
    int in_h = 0;
    int in_w = 0;
    std::vector<RowRange> out_ranges; // disjoint cover of [0, outH)
    std::vector<RowRange> in_ranges;  // matching input intervals
    std::uint64_t footprint_bytes = 0;

    int max_rows_per_partition() const;
};

/// Contiguous input-channel groups; each round adds its contribution to the
/// full output buffer.
struct ChannelPlan {
    ConvLayerSpec spec;
    int in_h = 0;
    int in_w = 0;
    std::vector<RowRange> groups; // disjoint cover of [0, C)
    std::uint64_t footprint_bytes = 0;

    int max_channels_per_group() const;
};

/// Plans with an explicit granularity, no budget check. The budgeted
/// planners call these; tests use them to force the finest partitioning on
/// layers that do not fit at all.
YPlanePlan make_yplane_plan(const ConvLayerSpec& spec, int in_h, int in_w, int rows_per_partition,
                            std::uint64_t page_bytes);
ChannelPlan make_channel_plan(const ConvLayerSpec& spec, int in_h, int in_w,
                              int channels_per_group, std::uint64_t page_bytes);

/// Greedy-maximal plans: the largest granularity whose footprint fits the
/// budget. Throws InfeasibleBudget when even the finest does not fit.
YPlanePlan plan_yplane(const ConvLayerSpec& spec, int in_h, int in_w, std::uint64_t budget_bytes,
                       std::uint64_t page_bytes);
ChannelPlan plan_channel(const ConvLayerSpec& spec, int in_h, int in_w, std::uint64_t budget_bytes,
                         std::uint64_t page_bytes);

enum class Scheme { unpartitioned, yplane, channel };
const char* scheme_name(Scheme s);

struct SchemeChoice {
    Scheme scheme = Scheme::unpartitioned;
    std::optional<YPlanePlan> yplane;
    std::optional<ChannelPlan> channel;
    // the compared footprints (record of why)
    std::uint64_t budget_bytes = 0;
    std::uint64_t unpartitioned_bytes = 0;
    std::optional<std::uint64_t> yplane_bytes;  // absent when infeasible
    std::optional<std::uint64_t> channel_bytes; // absent when infeasible

    std::uint64_t chosen_footprint() const;
    int partition_count() const;
};

/// Unpartitioned when everything fits; otherwise the feasible plan with the
/// smaller footprint, ties broken toward y-plane. Throws InfeasibleBudget
/// when neither scheme fits.
SchemeChoice select_scheme(const ConvLayerSpec& spec, int in_h, int in_w,
                           std::uint64_t budget_bytes, std::uint64_t page_bytes);

std::string scheme_choice_to_json(const SchemeChoice& choice);

enum class PartitionPolicy { yplane_only, channel_only, hybrid };

/// Smallest budget at which every conv layer of the model has a feasible
/// plan under the policy (binary search; feasibility is monotone in the
/// budget). Non-conv layers pass through.
std::uint64_t min_feasible_budget(const Model& model, PartitionPolicy policy,
                                  std::uint64_t page_bytes);

} // namespace teesim
