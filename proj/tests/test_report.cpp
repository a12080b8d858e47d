#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "teesim/reference.hpp"
#include "teesim/rng.hpp"

#include "teesim/experiment.hpp"

using namespace teesim;

namespace {

const std::filesystem::path kModels = std::filesystem::path(TEESIM_SOURCE_DIR) / "models";

Model tiny_model() {
    Model m = parse_model_json(R"({
        "name": "tiny",
        "input": {"channels": 3, "height": 16, "width": 16},
        "layers": [
            {"type": "conv", "in_channels": 3, "out_channels": 4, "kernel": 3, "stride": 1,
             "padding": 1, "bias": true, "activation": "relu"},
            {"type": "maxpool", "window": 2, "stride": 2},
            {"type": "conv", "in_channels": 4, "out_channels": 6, "kernel": 3, "stride": 1,
             "padding": 1, "bias": true, "activation": "relu"},
            {"type": "fc", "in_features": 384, "out_features": 10, "bias": true}
        ]})");
    m.randomize_weights(99);
    return m;
}

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.enclave.secure_bytes = 256 * 1024;
    cfg.enclave.page_bytes = 4096;
    cfg.seed = 7;
    return cfg;
}

} // namespace

TEST_CASE("emit_report with no rows is header-only") {
    const auto csv = emit_report({}, ReportFormat::csv);
    CHECK(csv.find("layer,type,scheme") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);
    const auto md = emit_report({}, ReportFormat::markdown);
    CHECK(std::count(md.begin(), md.end(), '\n') == 2); // header + separator
}

TEST_CASE("csv reports parse back with every numeric field intact") {
    const Model m = tiny_model();
    const auto res = run_experiment(m, tiny_config());
    REQUIRE(res.reports.size() == 4);
    const auto csv = emit_report(res.reports, ReportFormat::csv);
    const auto back = parse_csv_report(csv);
    CHECK(back == res.reports);
}

TEST_CASE("reports are byte-identical across runs with the same seed") {
    const Model m = tiny_model();
    const auto r1 = run_experiment(m, tiny_config());
    const auto r2 = run_experiment(m, tiny_config());
    CHECK(emit_report(r1.reports, ReportFormat::csv) == emit_report(r2.reports, ReportFormat::csv));
    CHECK(emit_report(r1.reports, ReportFormat::markdown) ==
          emit_report(r2.reports, ReportFormat::markdown));
    CHECK(r1.output_checksum == r2.output_checksum);
    CHECK(summary_text(r1) == summary_text(r2));
}

TEST_CASE("run_experiment output agrees with the reference oracle") {
    const Model m = tiny_model();
    for (const auto scheme :
         {RunScheme::unmodified, RunScheme::yplane, RunScheme::channel, RunScheme::hybrid}) {
        auto cfg = tiny_config();
        cfg.scheme = scheme;
        const auto res = run_experiment(m, cfg);
        CHECK(res.max_rel_vs_reference <= 1e-5);
        CHECK(res.infeasible_layers == 0);
        CHECK(res.total_faults > 0);
    }
    // lossy weights change the fc numerics but stay near the decoded oracle
    auto cfg = tiny_config();
    cfg.fc_codec = Codec::lossy;
    cfg.lossy_bits = 8;
    const auto res = run_experiment(m, cfg);
    CHECK(res.reports[3].scheme == "lossy");
    CHECK(res.reports[3].weight_faults > 0);
}

TEST_CASE("an infeasible layer becomes a report row, not a crash") {
    Model m = parse_model_json(R"({
        "input": {"channels": 8, "height": 64, "width": 64},
        "layers": [{"type": "conv", "in_channels": 8, "out_channels": 8, "kernel": 3,
                    "stride": 1, "padding": 1, "bias": true}]})");
    m.randomize_weights(3);
    ExperimentConfig cfg;
    cfg.enclave.secure_bytes = 2 * 4096; // nothing fits this
    const auto res = run_experiment(m, cfg);
    REQUIRE(res.reports.size() == 1);
    CHECK(res.reports[0].status == "infeasible");
    CHECK(res.reports[0].partitions == 0);
    CHECK(res.infeasible_layers == 1);
    CHECK(res.max_rel_vs_reference <= 1e-5); // output still produced untraced
}

TEST_CASE("explain_plan places y-plane early and channel late on vgg-large at 28 MiB") {
    const Model m = load_model(kModels / "vgg-large.json");
    const auto text = explain_plan(m, 28ull << 20, 4096);
    const auto line_of = [&](const std::string& prefix) {
        const auto at = text.find(prefix);
        REQUIRE(at != std::string::npos);
        return text.substr(at, text.find('\n', at) - at);
    };
    CHECK(line_of("layer 1 conv").find("yplane") != std::string::npos);
    CHECK(line_of("layer 2 conv").find("yplane") != std::string::npos);
    CHECK(line_of("layer 18 conv").find("channel") != std::string::npos);
    CHECK(line_of("layer 19 conv").find("channel") != std::string::npos);
    CHECK(line_of("layer 3 maxpool").find("pass-through") != std::string::npos);

    const auto huge = explain_plan(m, 1ull << 42, 4096);
    CHECK(huge.find("yplane") == std::string::npos);
    CHECK(huge.find("channel") == std::string::npos);
}

TEST_CASE("fp16 halves the fc weight faults in a full experiment") {
    const Model m = tiny_model();
    auto raw_cfg = tiny_config();
    auto fp16_cfg = tiny_config();
    fp16_cfg.fc_codec = Codec::fp16;
    const auto raw = run_experiment(m, raw_cfg);
    const auto fp16 = run_experiment(m, fp16_cfg);
    const auto raw_wf = raw.reports[3].weight_faults;
    const auto fp16_wf = fp16.reports[3].weight_faults;
    CHECK(fp16_wf + 1 >= (raw_wf + 1) / 2);
    CHECK(fp16_wf <= (raw_wf + 1) / 2 + 1);
    CHECK(fp16.max_rel_vs_reference <= 1e-5);
}

TEST_CASE("unmodified-scheme evictions never rise with enclave size") {
    // capture one real row-order trace, then replay it at growing capacities
    Model m = parse_model_json(R"({
        "input": {"channels": 4, "height": 24, "width": 24},
        "layers": [{"type": "conv", "in_channels": 4, "out_channels": 8, "kernel": 3,
                    "stride": 1, "padding": 1, "bias": true}]})");
    m.randomize_weights(21);
    auto cfg = tiny_config();
    cfg.scheme = RunScheme::unmodified;
    cfg.enclave.secure_bytes = 8 * 4096;
    cfg.record_trace = true;
    const auto res = run_experiment(m, cfg);
    REQUIRE(!res.trace.empty());

    std::uint64_t prev = ~0ull;
    for (std::uint64_t cap = 2; cap <= 64; cap += 3) {
        teesim::testing::LruReplay replay(cap);
        replay.run(res.trace);
        CHECK(replay.evictions <= prev);
        prev = replay.evictions;
    }
}

TEST_CASE("explain_plan on a single-conv model matches select_scheme") {
    Model m = parse_model_json(R"({
        "input": {"channels": 6, "height": 32, "width": 32},
        "layers": [{"type": "conv", "in_channels": 6, "out_channels": 8, "kernel": 3,
                    "stride": 1, "padding": 1, "bias": true}]})");
    const std::uint64_t budget = 64 * 1024;
    const auto choice = select_scheme(ConvLayerSpec{6, 8, 3, 1, 1, true}, 32, 32, budget, 4096);
    const auto text = explain_plan(m, budget, 4096);
    CHECK(text.find(scheme_name(choice.scheme)) != std::string::npos);
    CHECK(text.find("partitions=" + std::to_string(choice.partition_count())) !=
          std::string::npos);
    CHECK(text.find(std::to_string(choice.chosen_footprint())) != std::string::npos);
}

TEST_CASE("a vgg16-shaped model infers to 1000 finite logits") {
    Model m = scale_model(load_model(kModels / "vgg16.json"), 4);
    m.randomize_weights(5);
    Rng rng(6);
    Tensor3D in(m.input.channels, m.input.height, m.input.width);
    in.fill_random(rng);
    const auto out = model_infer_reference(m, in);
    REQUIRE(out.size() == 1000);
    for (float v : out) CHECK(std::isfinite(v));
}

TEST_CASE("recorded traces dump and replay") {
    const Model m = tiny_model();
    auto cfg = tiny_config();
    cfg.record_trace = true;
    const auto res = run_experiment(m, cfg);
    CHECK(!res.trace.empty());
    std::ostringstream os;
    dump_trace(os, res.trace);
    std::istringstream is(os.str());
    CHECK(parse_trace(is) == res.trace);
}
