#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "teesim/experiment.hpp"

using namespace teesim;

int main(int argc, char** argv) {
    CLI::App app{"teesim: memory-budget-aware CNN inference over a simulated secure-paging layer"};

    std::string model_path;
    double enclave_mb = 28.0;
    std::uint64_t page_bytes = 4096;
    std::string scheme = "hybrid";
    std::string fc_codec = "raw32";
    int bits = 5;
    int workers = 1;
    std::uint64_t seed = 42;
    std::string format = "markdown";
    std::string out_path;
    std::string trace_out;
    int scale = 1;
    bool explain = false;
    bool skip_reference = false;

    app.add_option("--model", model_path, "model JSON file")->required();
    app.add_option("--enclave-mb", enclave_mb, "secure memory size in MiB (default 28)");
    app.add_option("--page-bytes", page_bytes, "page size in bytes (default 4096)");
    app.add_option("--scheme", scheme, "unmodified|yplane|channel|hybrid (default hybrid)")
        ->check(CLI::IsMember({"unmodified", "yplane", "channel", "hybrid"}));
    app.add_option("--fc-codec", fc_codec, "raw32|fp16|lossy (default raw32)")
        ->check(CLI::IsMember({"raw32", "fp16", "lossy"}));
    app.add_option("--bits", bits, "lossy bits per value, 2..10 (default 5)");
    app.add_option("--workers", workers, "decode workers for the link model (default 1)");
    app.add_option("--seed", seed, "weights/input seed (default 42)");
    app.add_option("--format", format, "csv|markdown (default markdown)")
        ->check(CLI::IsMember({"csv", "markdown"}));
    app.add_option("--out", out_path, "write the report here instead of stdout");
    app.add_option("--trace-out", trace_out, "dump the page-access trace to this file");
    app.add_option("--scale", scale, "divide spatial and channel dims by this (default 1)");
    app.add_flag("--explain", explain, "print per-layer scheme choices and exit");
    app.add_flag("--skip-reference", skip_reference, "skip the oracle cross-check (big models)");

    CLI11_PARSE(app, argc, argv);

    try {
        Model model = load_model(model_path);
        if (scale != 1) model = scale_model(model, scale);

        ExperimentConfig config;
        config.enclave.secure_bytes = static_cast<std::uint64_t>(enclave_mb * 1024.0 * 1024.0);
        config.enclave.page_bytes = page_bytes;
        config.scheme = *run_scheme_from_name(scheme);
        config.fc_codec = fc_codec == "raw32"  ? Codec::raw32
                          : fc_codec == "fp16" ? Codec::fp16
                                               : Codec::lossy;
        config.lossy_bits = bits;
        config.workers = workers;
        config.seed = seed;
        config.compute_reference = !skip_reference;
        config.record_trace = !trace_out.empty();

        if (explain) {
            std::cout << explain_plan(model, config.enclave.secure_bytes, page_bytes);
            return 0;
        }

        if (model.weighted_layer_count() > 0) {
            // models without a sidecar run with seeded random weights
            bool have = true;
            for (const auto& l : model.layers) {
                if (const auto* c = std::get_if<ConvLayer>(&l)) {
                    have = have && static_cast<std::int64_t>(c->weights.size()) ==
                                       c->spec.weight_count();
                } else if (const auto* fc = std::get_if<FcLayer>(&l)) {
                    have = have && static_cast<std::int64_t>(fc->weights.size()) ==
                                       fc->spec.weight_count();
                }
            }
            if (!have) model.randomize_weights(seed);
        }

        const ExperimentResult result = run_experiment(model, config);

        const std::string report =
            emit_report(result.reports,
                        format == "csv" ? ReportFormat::csv : ReportFormat::markdown) +
            "\n" + summary_text(result);
        if (out_path.empty()) {
            std::cout << report;
        } else {
            std::ofstream f(out_path);
            if (!f) throw Error("cannot write " + out_path);
            f << report;
        }
        if (!trace_out.empty()) {
            std::ofstream f(trace_out);
            if (!f) throw Error("cannot write " + trace_out);
            dump_trace(f, result.trace);
        }
        return result.infeasible_layers > 0 ? 2 : 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
