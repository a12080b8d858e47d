#pragma once

#include <filesystem>
#include <string>

#include "teesim/layers.hpp"

namespace teesim {

/// Parses a model description (JSON) and, when a "weights" sidecar is named
/// and present next to the file, loads it. Otherwise weight arrays are left
/// empty for the caller to randomize. Errors name the offending field and
/// layer.
Model load_model(const std::filesystem::path& path);

Model parse_model_json(const std::string& text);
std::string model_to_json(const Model& model);

/// Sidecar format: concatenated little-endian float32 in declaration order;
/// for each weighted layer, weights then bias (when present).
void save_weights_sidecar(const Model& model, const std::filesystem::path& path);
void load_weights_sidecar(Model& model, const std::filesystem::path& path);

/// Desk-scale transform: divides spatial input dims and per-layer widths
/// (conv out_channels, fc out_features except the final classifier) by
/// `divisor`, rounding to nearest with a floor of 1. Structural clamps keep
/// the partition geometry meaningful at small scale: a pool whose output
/// would drop below 4x4 is dropped and a strided conv whose output would
/// drop below 4x4 runs at stride 1. fc in_features are recomputed from the
/// chain. Weight arrays are cleared.
Model scale_model(const Model& model, int divisor);

} // namespace teesim
