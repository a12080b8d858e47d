#include "teesim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "teesim/executors.hpp"
#include "teesim/reference.hpp"

namespace teesim {

const char* run_scheme_name(RunScheme s) {
    switch (s) {
        case RunScheme::unmodified: return "unmodified";
        case RunScheme::yplane: return "yplane";
        case RunScheme::channel: return "channel";
        case RunScheme::hybrid: return "hybrid";
    }
    return "?";
}

std::optional<RunScheme> run_scheme_from_name(const std::string& s) {
    if (s == "unmodified") return RunScheme::unmodified;
    if (s == "yplane") return RunScheme::yplane;
    if (s == "channel") return RunScheme::channel;
    if (s == "hybrid") return RunScheme::hybrid;
    return std::nullopt;
}

namespace {

double max_mixed_rel_diff(std::span<const float> got, std::span<const float> want) {
    double m = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double denom = std::max({1.0, std::abs(static_cast<double>(got[i])),
                                       std::abs(static_cast<double>(want[i]))});
        m = std::max(m, std::abs(static_cast<double>(got[i]) - want[i]) / denom);
    }
    return m;
}

void touch_whole(Enclave& enclave, const BufferHandle& buf) {
    enclave.read(buf, 0, buf.length);
    enclave.write(buf, 0, buf.length);
}

WeightBlob encode_fc(const FcLayer& fc, Codec codec, int lossy_bits) {
    switch (codec) {
        case Codec::raw32: return encode_raw32(fc.weights);
        case Codec::fp16: return quantize_fp16(fc.weights);
        case Codec::lossy: return compress_lossy(fc.weights, lossy_bits);
    }
    throw CodecError("unknown fc codec");
}

void check_weights_present(const Model& model) {
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const std::string where = "layer " + std::to_string(i + 1);
        if (const auto* conv = std::get_if<ConvLayer>(&model.layers[i])) {
            if (static_cast<std::int64_t>(conv->weights.size()) != conv->spec.weight_count()) {
                throw Error(where + ": weights not loaded; load a sidecar or randomize first");
            }
        } else if (const auto* fc = std::get_if<FcLayer>(&model.layers[i])) {
            if (static_cast<std::int64_t>(fc->weights.size()) != fc->spec.weight_count()) {
                throw Error(where + ": weights not loaded; load a sidecar or randomize first");
            }
        }
    }
}

} // namespace

ExperimentResult run_experiment(const Model& model, const ExperimentConfig& config) {
    config.enclave.validate();
    check_weights_present(model);
    const auto chain = model.shape_chain();

    Rng rng(config.seed ^ 0x7e57da7aull);
    Tensor3D cur(chain[0].channels, chain[0].height, chain[0].width);
    cur.fill_random(rng);

    std::vector<float> reference;
    if (config.compute_reference) {
        if (config.fc_codec == Codec::raw32) {
            reference = model_infer_reference(model, cur);
        } else {
            // the reference sees the same weights the run decodes
            Model decoded = model;
            for (auto& layer : decoded.layers) {
                if (auto* fc = std::get_if<FcLayer>(&layer)) {
                    fc->weights = decode(encode_fc(*fc, config.fc_codec, config.lossy_bits));
                }
            }
            reference = model_infer_reference(decoded, cur);
        }
    }

    Enclave enclave(config.enclave);
    enclave.record_trace(config.record_trace);
    const std::uint64_t page = config.enclave.page_bytes;
    const std::uint64_t budget = config.enclave.secure_bytes;

    ExperimentResult res;
    res.min_budget_yplane = min_feasible_budget(model, PartitionPolicy::yplane_only, page);
    res.min_budget_channel = min_feasible_budget(model, PartitionPolicy::channel_only, page);
    res.min_budget_hybrid = min_feasible_budget(model, PartitionPolicy::hybrid, page);

    BufferHandle cur_buf = enclave.alloc(cur.bytes(), "input");

    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const std::string tag = ":" + std::to_string(i + 1);
        LayerReport rep;
        rep.index = static_cast<int>(i + 1);
        rep.type = layer_type_name(model.layers[i]);
        const PagingStats before = enclave.stats();

        if (const auto* conv = std::get_if<ConvLayer>(&model.layers[i])) {
            const ConvSizes sizes = ConvSizes::of(conv->spec, cur.height, cur.width);
            rep.input_bytes = sizes.input_bytes;
            rep.weights_bytes = sizes.weight_bytes;
            rep.im2col_bytes = sizes.im2col_bytes;
            rep.output_bytes = sizes.output_bytes;

            std::optional<YPlanePlan> yplan;
            std::optional<ChannelPlan> chplan;
            bool row_order = false;
            bool infeasible = false;
            std::uint64_t staging_bytes = sizes.im2col_bytes;
            switch (config.scheme) {
                case RunScheme::unmodified:
                    rep.scheme = "unmodified";
                    rep.partitions = 1;
                    rep.footprint_bytes = unpartitioned_footprint(conv->spec, cur.height,
                                                                  cur.width, page);
                    row_order = true;
                    break;
                case RunScheme::yplane:
                    rep.scheme = "yplane";
                    try {
                        yplan = plan_yplane(conv->spec, cur.height, cur.width, budget, page);
                    } catch (const InfeasibleBudget&) {
                        infeasible = true;
                        rep.footprint_bytes =
                            yplane_footprint(conv->spec, cur.height, cur.width, 1, page);
                    }
                    break;
                case RunScheme::channel:
                    rep.scheme = "channel";
                    try {
                        chplan = plan_channel(conv->spec, cur.height, cur.width, budget, page);
                    } catch (const InfeasibleBudget&) {
                        infeasible = true;
                        rep.footprint_bytes =
                            channel_footprint(conv->spec, cur.height, cur.width, 1, page);
                    }
                    break;
                case RunScheme::hybrid:
                    try {
                        auto choice = select_scheme(conv->spec, cur.height, cur.width, budget, page);
                        rep.scheme = scheme_name(choice.scheme);
                        if (choice.yplane) yplan = std::move(choice.yplane);
                        if (choice.channel) chplan = std::move(choice.channel);
                        if (choice.scheme == Scheme::unpartitioned) {
                            rep.partitions = 1;
                            rep.footprint_bytes = choice.unpartitioned_bytes;
                        }
                    } catch (const InfeasibleBudget&) {
                        rep.scheme = "hybrid";
                        infeasible = true;
                        rep.footprint_bytes = std::min(
                            yplane_footprint(conv->spec, cur.height, cur.width, 1, page),
                            channel_footprint(conv->spec, cur.height, cur.width, 1, page));
                    }
                    break;
            }
            if (yplan) {
                rep.partitions = static_cast<int>(yplan->out_ranges.size());
                rep.footprint_bytes = yplan->footprint_bytes;
                staging_bytes = static_cast<std::uint64_t>(yplan->spec.in_channels) *
                                yplan->spec.kernel * yplan->spec.kernel *
                                yplan->max_rows_per_partition() * sizes.out_w * sizeof(float);
            }
            if (chplan) {
                rep.partitions = static_cast<int>(chplan->groups.size());
                rep.footprint_bytes = chplan->footprint_bytes;
                staging_bytes = static_cast<std::uint64_t>(chplan->max_channels_per_group()) *
                                chplan->spec.kernel * chplan->spec.kernel * sizes.out_h *
                                sizes.out_w * sizeof(float);
            }

            Tensor3D out;
            if (infeasible) {
                rep.status = "infeasible";
                rep.partitions = 0;
                // keep the data flowing for the rest of the model, untraced
                out = conv2d_im2col(cur, conv->weights, conv->bias, conv->spec);
                if (conv->activation == ActivationKind::relu) relu_inplace(out.data);
                res.infeasible_layers += 1;
                cur = std::move(out);
                cur_buf = enclave.alloc(std::max<std::uint64_t>(cur.bytes(), 1), "skipped" + tag);
            } else {
                ConvBuffers bufs;
                bufs.input = cur_buf;
                bufs.weights = enclave.alloc(sizes.weight_bytes, "weights" + tag);
                bufs.bias = enclave.alloc(std::max<std::uint64_t>(sizes.bias_bytes, 4), "bias" + tag);
                bufs.output = enclave.alloc(sizes.output_bytes, "output" + tag);
                bufs.im2col = enclave.alloc(staging_bytes, "im2col" + tag);
                if (yplan) {
                    out = conv2d_yplane(cur, conv->weights, conv->bias, *yplan, &enclave, &bufs);
                } else if (chplan) {
                    out = conv2d_channel(cur, conv->weights, conv->bias, *chplan, &enclave, &bufs);
                } else {
                    out = conv2d_im2col(cur, conv->weights, conv->bias, conv->spec, &enclave,
                                        &bufs, row_order);
                }
                if (conv->activation == ActivationKind::relu) {
                    relu_inplace(out.data);
                    touch_whole(enclave, bufs.output);
                }
                rep.weight_faults = enclave.faults_for(bufs.weights);
                cur = std::move(out);
                cur_buf = bufs.output;
            }
        } else if (const auto* pool = std::get_if<MaxPoolLayer>(&model.layers[i])) {
            rep.scheme = "-";
            rep.input_bytes = cur.bytes();
            Tensor3D out(cur.channels, pool->out_dim(cur.height), pool->out_dim(cur.width));
            rep.output_bytes = out.bytes();
            BufferHandle obuf = enclave.alloc(out.bytes(), "output" + tag);
            out = maxpool_traced(cur, pool->window, pool->stride, &enclave, &cur_buf, &obuf);
            cur = std::move(out);
            cur_buf = obuf;
        } else if (const auto* fc = std::get_if<FcLayer>(&model.layers[i])) {
            rep.input_bytes = cur.bytes();
            rep.weights_bytes = static_cast<std::uint64_t>(fc->spec.weight_count()) * sizeof(float);
            rep.output_bytes = static_cast<std::uint64_t>(fc->spec.out_features) * sizeof(float);
            rep.scheme = codec_name(config.fc_codec);
            const WeightBlob blob = encode_fc(*fc, config.fc_codec, config.lossy_bits);
            FcBuffers bufs;
            bufs.input = cur_buf;
            bufs.weights = enclave.alloc(blob.stream_bytes(), "fc-weights" + tag);
            bufs.bias = enclave.alloc(
                std::max<std::uint64_t>(fc->bias.size() * sizeof(float), 4), "bias" + tag);
            bufs.output = enclave.alloc(rep.output_bytes, "output" + tag);
            auto fr = fc_streamed(cur.data, blob, fc->spec, fc->bias, enclave, bufs,
                                  config.workers);
            if (fc->activation == ActivationKind::relu) {
                relu_inplace(fr.output);
                touch_whole(enclave, bufs.output);
            }
            rep.weight_faults = fr.weight_pages_faulted;
            rep.link_units = fr.link_units;
            rep.footprint_bytes = blob.stream_bytes() + rep.input_bytes + rep.output_bytes +
                                  footprint_overhead(page);
            cur = Tensor3D(fc->spec.out_features, 1, 1, std::move(fr.output));
            cur_buf = bufs.output;
        } else {
            const auto* act = std::get_if<ActivationLayer>(&model.layers[i]);
            rep.scheme = "-";
            rep.input_bytes = rep.output_bytes = cur.bytes();
            if (act->kind == ActivationKind::relu) relu_inplace(cur.data);
            touch_whole(enclave, cur_buf);
        }

        const PagingStats delta = enclave.stats().delta_since(before);
        rep.faults = delta.faults;
        rep.evictions = delta.evictions;
        rep.cost_units = delta.total_cost;
        rep.checksum = checksum_hex(cur.data);
        res.total_faults += rep.faults;
        res.total_evictions += rep.evictions;
        res.total_cost_units += rep.cost_units;
        res.total_link_units += rep.link_units;
        res.reports.push_back(std::move(rep));
    }

    res.output_checksum = checksum_hex(cur.data);
    res.max_rel_vs_reference =
        config.compute_reference ? max_mixed_rel_diff(cur.data, reference) : -1.0;
    if (config.record_trace) res.trace = enclave.trace();
    return res;
}

std::string summary_text(const ExperimentResult& result) {
    std::ostringstream os;
    os << "total_faults " << result.total_faults << "\n"
       << "total_evictions " << result.total_evictions << "\n"
       << "total_cost_units " << result.total_cost_units << "\n"
       << "total_link_units " << result.total_link_units << "\n"
       << "infeasible_layers " << result.infeasible_layers << "\n"
       << "min_budget_yplane " << result.min_budget_yplane << "\n"
       << "min_budget_channel " << result.min_budget_channel << "\n"
       << "min_budget_hybrid " << result.min_budget_hybrid << "\n"
       << "output_checksum " << result.output_checksum << "\n";
    if (result.max_rel_vs_reference >= 0) {
        os << "max_rel_vs_reference " << result.max_rel_vs_reference << "\n";
    }
    return os.str();
}

std::string explain_plan(const Model& model, std::uint64_t budget_bytes,
                         std::uint64_t page_bytes) {
    const auto chain = model.shape_chain();
    std::ostringstream os;
    os << "budget_bytes " << budget_bytes << " page_bytes " << page_bytes << "\n";
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        os << "layer " << (i + 1) << " " << layer_type_name(model.layers[i]);
        const auto* conv = std::get_if<ConvLayer>(&model.layers[i]);
        if (!conv) {
            os << ": pass-through\n";
            continue;
        }
        const auto& in = chain[i];
        os << " " << conv->spec.in_channels << "->" << conv->spec.out_channels << " @"
           << in.height << "x" << in.width << ": ";
        try {
            const auto choice =
                select_scheme(conv->spec, in.height, in.width, budget_bytes, page_bytes);
            os << scheme_name(choice.scheme) << " partitions=" << choice.partition_count()
               << " footprint=" << choice.chosen_footprint() << "\n  "
               << scheme_choice_to_json(choice) << "\n";
        } catch (const InfeasibleBudget& e) {
            os << "infeasible (" << e.what() << ")\n";
        }
    }
    return os.str();
}

} // namespace teesim
