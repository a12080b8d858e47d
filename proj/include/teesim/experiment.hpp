#pragma once

#include <optional>
#include <string>

#include "teesim/enclave.hpp"
#include "teesim/fc_stream.hpp"
#include "teesim/model_io.hpp"
#include "teesim/partition.hpp"
#include "teesim/report.hpp"

namespace teesim {

enum class RunScheme { unmodified, yplane, channel, hybrid };
const char* run_scheme_name(RunScheme s);
std::optional<RunScheme> run_scheme_from_name(const std::string& s);

struct ExperimentConfig {
    EnclaveConfig enclave;
    RunScheme scheme = RunScheme::hybrid;
    Codec fc_codec = Codec::raw32;
    int lossy_bits = 5;
    int workers = 1;
    std::uint64_t seed = 42;
    bool compute_reference = true; // check the traced output against the oracle path
    bool record_trace = false;
};

struct ExperimentResult {
    std::vector<LayerReport> reports;
    std::uint64_t total_faults = 0;
    std::uint64_t total_evictions = 0;
    double total_cost_units = 0.0;
    double total_link_units = 0.0;
    int infeasible_layers = 0;
    std::uint64_t min_budget_yplane = 0;
    std::uint64_t min_budget_channel = 0;
    std::uint64_t min_budget_hybrid = 0;
    std::string output_checksum;
    double max_rel_vs_reference = 0.0; // -1 when the reference was skipped
    std::vector<PageAccess> trace;     // only when record_trace
};

/// Runs the whole model through one enclave instance, layer by layer, with
/// per-layer stats deltas. Weights must be populated (load or randomize
/// first); the input tensor is drawn from the seed. An infeasible layer
/// becomes a report row, not an error; its output is computed untraced so
/// later layers still run.
ExperimentResult run_experiment(const Model& model, const ExperimentConfig& config);

std::string summary_text(const ExperimentResult& result);

/// Per-conv-layer scheme choice at the given budget, with the compared
/// footprints and the serialized plan.
std::string explain_plan(const Model& model, std::uint64_t budget_bytes,
                         std::uint64_t page_bytes);

} // namespace teesim
