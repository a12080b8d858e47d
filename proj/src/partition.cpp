#include "teesim/partition.hpp"

#include <algorithm>

#include <json.hpp>

namespace teesim {

RowRange yplane_input_range(int y_lo, int y_hi, const ConvLayerSpec& spec, int in_h) {
    spec.validate();
    const int out_h = spec.out_dim(in_h);
    if (y_lo < 0 || y_lo >= y_hi || y_hi > out_h) {
        throw ShapeError("yplane_input_range: [" + std::to_string(y_lo) + "," +
                         std::to_string(y_hi) + ") outside [0," + std::to_string(out_h) + ")");
    }
    const int lo = std::max(0, y_lo * spec.stride - spec.padding);
    int hi = std::min(in_h, (y_hi - 1) * spec.stride - spec.padding + spec.kernel);
    if (hi < lo) hi = lo; // window fully inside the padding
    return RowRange{lo, hi};
}

int YPlanePlan::max_rows_per_partition() const {
    int m = 0;
    for (const auto& r : out_ranges) m = std::max(m, r.size());
    return m;
}

int ChannelPlan::max_channels_per_group() const {
    int m = 0;
    for (const auto& g : groups) m = std::max(m, g.size());
    return m;
}

YPlanePlan make_yplane_plan(const ConvLayerSpec& spec, int in_h, int in_w, int rows_per_partition,
                            std::uint64_t page_bytes) {
    spec.validate();
    const int out_h = spec.out_dim(in_h);
    if (rows_per_partition < 1) throw ShapeError("yplane plan: rows_per_partition must be >= 1");
    YPlanePlan plan;
    plan.spec = spec;
    plan.in_h = in_h;
    plan.in_w = in_w;
    for (int lo = 0; lo < out_h; lo += rows_per_partition) {
        const int hi = std::min(lo + rows_per_partition, out_h);
        plan.out_ranges.push_back(RowRange{lo, hi});
        plan.in_ranges.push_back(yplane_input_range(lo, hi, spec, in_h));
    }
    plan.footprint_bytes =
        yplane_footprint(spec, in_h, in_w, std::min(rows_per_partition, out_h), page_bytes);
    return plan;
}

ChannelPlan make_channel_plan(const ConvLayerSpec& spec, int in_h, int in_w,
                              int channels_per_group, std::uint64_t page_bytes) {
    spec.validate();
    if (channels_per_group < 1) throw ShapeError("channel plan: channels_per_group must be >= 1");
    ChannelPlan plan;
    plan.spec = spec;
    plan.in_h = in_h;
    plan.in_w = in_w;
    for (int lo = 0; lo < spec.in_channels; lo += channels_per_group) {
        plan.groups.push_back(RowRange{lo, std::min(lo + channels_per_group, spec.in_channels)});
    }
    plan.footprint_bytes = channel_footprint(
        spec, in_h, in_w, std::min(channels_per_group, spec.in_channels), page_bytes);
    return plan;
}

namespace {

// Largest granularity in [1, max_g] whose (monotone) cost fits; 0 when none.
template <typename FootprintFn>
int max_fitting_granularity(int max_g, std::uint64_t budget, FootprintFn&& footprint) {
    if (footprint(1) > budget) return 0;
    int lo = 1, hi = max_g;
    while (lo < hi) {
        const int mid = lo + (hi - lo + 1) / 2;
        if (footprint(mid) <= budget) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return lo;
}

// Bytes of raw input a round streams through while building its im2col
// block, plus the page-rounding slop of per-plane row bands (a band touches
// at least one page in every channel plane it crosses). Not part of the
// footprint estimate (the block itself dominates), but the planner keeps
// headroom for both so a plan made for budget B runs at B without cycling
// one page over capacity.
std::uint64_t yplane_round_input_bytes(const ConvLayerSpec& spec, int in_h, int in_w, int rows,
                                       std::uint64_t page_bytes) {
    const std::uint64_t need = std::min<std::uint64_t>(
        in_h, static_cast<std::uint64_t>(rows - 1) * spec.stride + spec.kernel);
    const std::uint64_t stream =
        static_cast<std::uint64_t>(spec.in_channels) * need * in_w * sizeof(float);
    const std::uint64_t band_slop =
        static_cast<std::uint64_t>(spec.in_channels + spec.out_channels + 4) * page_bytes;
    return stream + band_slop;
}

std::uint64_t channel_round_input_bytes(int in_h, int in_w, int group,
                                        std::uint64_t page_bytes) {
    return static_cast<std::uint64_t>(group) * in_h * in_w * sizeof(float) +
           static_cast<std::uint64_t>(group + 4) * page_bytes;
}

} // namespace

YPlanePlan plan_yplane(const ConvLayerSpec& spec, int in_h, int in_w, std::uint64_t budget_bytes,
                       std::uint64_t page_bytes) {
    spec.validate();
    const int out_h = spec.out_dim(in_h);
    if (yplane_footprint(spec, in_h, in_w, 1, page_bytes) > budget_bytes) {
        throw InfeasibleBudget(
            "y-plane partitioning infeasible: single-row working set " +
            std::to_string(yplane_footprint(spec, in_h, in_w, 1, page_bytes)) +
            " bytes exceeds budget " + std::to_string(budget_bytes));
    }
    int rows = max_fitting_granularity(out_h, budget_bytes, [&](int r) {
        return yplane_footprint(spec, in_h, in_w, r, page_bytes) +
               yplane_round_input_bytes(spec, in_h, in_w, r, page_bytes);
    });
    if (rows == 0) rows = 1; // the bare floor fits even if the headroom does not
    return make_yplane_plan(spec, in_h, in_w, rows, page_bytes);
}

ChannelPlan plan_channel(const ConvLayerSpec& spec, int in_h, int in_w, std::uint64_t budget_bytes,
                         std::uint64_t page_bytes) {
    spec.validate();
    if (channel_footprint(spec, in_h, in_w, 1, page_bytes) > budget_bytes) {
        throw InfeasibleBudget(
            "channel partitioning infeasible: single-channel working set " +
            std::to_string(channel_footprint(spec, in_h, in_w, 1, page_bytes)) +
            " bytes exceeds budget " + std::to_string(budget_bytes) +
            " (the full output stays resident)");
    }
    int group = max_fitting_granularity(spec.in_channels, budget_bytes, [&](int g) {
        return channel_footprint(spec, in_h, in_w, g, page_bytes) +
               channel_round_input_bytes(in_h, in_w, g, page_bytes);
    });
    if (group == 0) group = 1;
    return make_channel_plan(spec, in_h, in_w, group, page_bytes);
}

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::unpartitioned: return "unpartitioned";
        case Scheme::yplane: return "yplane";
        case Scheme::channel: return "channel";
    }
    return "?";
}

std::uint64_t SchemeChoice::chosen_footprint() const {
    switch (scheme) {
        case Scheme::unpartitioned: return unpartitioned_bytes;
        case Scheme::yplane: return yplane->footprint_bytes;
        case Scheme::channel: return channel->footprint_bytes;
    }
    return 0;
}

int SchemeChoice::partition_count() const {
    switch (scheme) {
        case Scheme::unpartitioned: return 1;
        case Scheme::yplane: return static_cast<int>(yplane->out_ranges.size());
        case Scheme::channel: return static_cast<int>(channel->groups.size());
    }
    return 0;
}

SchemeChoice select_scheme(const ConvLayerSpec& spec, int in_h, int in_w,
                           std::uint64_t budget_bytes, std::uint64_t page_bytes) {
    SchemeChoice choice;
    choice.budget_bytes = budget_bytes;
    choice.unpartitioned_bytes = unpartitioned_footprint(spec, in_h, in_w, page_bytes);
    if (choice.unpartitioned_bytes <= budget_bytes) {
        choice.scheme = Scheme::unpartitioned;
        return choice;
    }
    try {
        choice.yplane = plan_yplane(spec, in_h, in_w, budget_bytes, page_bytes);
        choice.yplane_bytes = choice.yplane->footprint_bytes;
    } catch (const InfeasibleBudget&) {
    }
    try {
        choice.channel = plan_channel(spec, in_h, in_w, budget_bytes, page_bytes);
        choice.channel_bytes = choice.channel->footprint_bytes;
    } catch (const InfeasibleBudget&) {
    }
    if (!choice.yplane && !choice.channel) {
        throw InfeasibleBudget("no partitioning scheme fits " + std::to_string(budget_bytes) +
                               " bytes (y-plane needs " +
                               std::to_string(yplane_footprint(spec, in_h, in_w, 1, page_bytes)) +
                               ", channel needs " +
                               std::to_string(channel_footprint(spec, in_h, in_w, 1, page_bytes)) +
                               ")");
    }
    if (choice.yplane && (!choice.channel || *choice.yplane_bytes <= *choice.channel_bytes)) {
        choice.scheme = Scheme::yplane; // ties go to y-plane
        choice.channel.reset();
    } else {
        choice.scheme = Scheme::channel;
        choice.yplane.reset();
    }
    return choice;
}

std::string scheme_choice_to_json(const SchemeChoice& choice) {
    nlohmann::json j;
    j["scheme"] = scheme_name(choice.scheme);
    j["budget_bytes"] = choice.budget_bytes;
    j["unpartitioned_bytes"] = choice.unpartitioned_bytes;
    if (choice.yplane_bytes) j["yplane_bytes"] = *choice.yplane_bytes;
    if (choice.channel_bytes) j["channel_bytes"] = *choice.channel_bytes;
    j["partitions"] = choice.partition_count();
    if (choice.yplane) {
        auto& arr = j["output_row_ranges"] = nlohmann::json::array();
        for (const auto& r : choice.yplane->out_ranges) arr.push_back({r.lo, r.hi});
        auto& in = j["input_row_ranges"] = nlohmann::json::array();
        for (const auto& r : choice.yplane->in_ranges) in.push_back({r.lo, r.hi});
    }
    if (choice.channel) {
        auto& arr = j["channel_groups"] = nlohmann::json::array();
        for (const auto& g : choice.channel->groups) arr.push_back({g.lo, g.hi});
    }
    return j.dump();
}

std::uint64_t min_feasible_budget(const Model& model, PartitionPolicy policy,
                                  std::uint64_t page_bytes) {
    struct ConvAt {
        ConvLayerSpec spec;
        int in_h, in_w;
    };
    std::vector<ConvAt> convs;
    const auto chain = model.shape_chain();
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        if (const auto* conv = std::get_if<ConvLayer>(&model.layers[i])) {
            convs.push_back(ConvAt{conv->spec, chain[i].height, chain[i].width});
        }
    }
    if (convs.empty()) return 0;

    const auto feasible_at = [&](std::uint64_t budget) {
        for (const auto& c : convs) {
            const std::uint64_t y = yplane_footprint(c.spec, c.in_h, c.in_w, 1, page_bytes);
            const std::uint64_t ch = channel_footprint(c.spec, c.in_h, c.in_w, 1, page_bytes);
            bool ok = false;
            switch (policy) {
                case PartitionPolicy::yplane_only: ok = y <= budget; break;
                case PartitionPolicy::channel_only: ok = ch <= budget; break;
                case PartitionPolicy::hybrid: ok = y <= budget || ch <= budget; break;
            }
            if (!ok) return false;
        }
        return true;
    };

    std::uint64_t hi = 0;
    for (const auto& c : convs) {
        hi = std::max(hi, unpartitioned_footprint(c.spec, c.in_h, c.in_w, page_bytes));
    }
    std::uint64_t lo = 0;
    while (lo < hi) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (feasible_at(mid)) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return lo;
}

} // namespace teesim
