#include "teesim/model_io.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace teesim {

namespace {

using nlohmann::json;

template <typename T>
T require(const json& j, const char* field, const std::string& where) {
    if (!j.contains(field)) {
        throw ParseError(where + ": missing field '" + field + "'");
    }
    try {
        return j.at(field).get<T>();
    } catch (const json::exception&) {
        throw ParseError(where + ": field '" + field + "' has the wrong type");
    }
}

template <typename T>
T optional_field(const json& j, const char* field, T fallback, const std::string& where) {
    if (!j.contains(field)) return fallback;
    try {
        return j.at(field).get<T>();
    } catch (const json::exception&) {
        throw ParseError(where + ": field '" + field + "' has the wrong type");
    }
}

ActivationKind parse_activation(const json& j, const std::string& where, const char* field,
                                ActivationKind fallback) {
    const std::string name = optional_field<std::string>(j, field, activation_name(fallback), where);
    const auto kind = activation_from_name(name);
    if (!kind) throw ParseError(where + ": unknown activation '" + name + "'");
    return *kind;
}

} // namespace

Model parse_model_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("model: invalid JSON: ") + e.what());
    }
    Model m;
    m.name = optional_field<std::string>(j, "name", "model", "model");
    const json& in = j.contains("input") ? j.at("input") : throw ParseError("model: missing field 'input'");
    m.input.channels = require<int>(in, "channels", "input");
    m.input.height = require<int>(in, "height", "input");
    m.input.width = require<int>(in, "width", "input");
    if (!j.contains("layers") || !j.at("layers").is_array()) {
        throw ParseError("model: missing field 'layers'");
    }
    std::size_t idx = 0;
    for (const auto& lj : j.at("layers")) {
        ++idx;
        const std::string where = "layer " + std::to_string(idx);
        const std::string type = require<std::string>(lj, "type", where);
        if (type == "conv") {
            ConvLayer l;
            l.spec.in_channels = require<int>(lj, "in_channels", where);
            l.spec.out_channels = require<int>(lj, "out_channels", where);
            l.spec.kernel = require<int>(lj, "kernel", where);
            l.spec.stride = optional_field<int>(lj, "stride", 1, where);
            l.spec.padding = optional_field<int>(lj, "padding", 0, where);
            l.spec.has_bias = optional_field<bool>(lj, "bias", true, where);
            l.activation = parse_activation(lj, where, "activation", ActivationKind::none);
            m.layers.emplace_back(std::move(l));
        } else if (type == "maxpool") {
            MaxPoolLayer l;
            l.window = require<int>(lj, "window", where);
            l.stride = require<int>(lj, "stride", where);
            m.layers.emplace_back(l);
        } else if (type == "fc") {
            FcLayer l;
            l.spec.in_features = require<int>(lj, "in_features", where);
            l.spec.out_features = require<int>(lj, "out_features", where);
            l.spec.has_bias = optional_field<bool>(lj, "bias", true, where);
            l.activation = parse_activation(lj, where, "activation", ActivationKind::none);
            m.layers.emplace_back(std::move(l));
        } else if (type == "activation") {
            ActivationLayer l;
            l.kind = parse_activation(lj, where, "kind", ActivationKind::relu);
            m.layers.emplace_back(l);
        } else {
            throw ParseError(where + ": unknown layer type '" + type + "'");
        }
    }
    try {
        m.shape_chain();
    } catch (const ShapeError& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
    return m;
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open model file " + path.string());
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Model m = parse_model_json(text);

    json j = json::parse(text); // already validated
    if (j.contains("weights")) {
        const auto sidecar = path.parent_path() / j.at("weights").get<std::string>();
        if (std::filesystem::exists(sidecar)) {
            load_weights_sidecar(m, sidecar);
        }
    }
    return m;
}

std::string model_to_json(const Model& model) {
    json j;
    j["name"] = model.name;
    j["input"] = {{"channels", model.input.channels},
                  {"height", model.input.height},
                  {"width", model.input.width}};
    auto& arr = j["layers"] = json::array();
    for (const auto& layer : model.layers) {
        json lj;
        if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            lj = {{"type", "conv"},
                  {"in_channels", conv->spec.in_channels},
                  {"out_channels", conv->spec.out_channels},
                  {"kernel", conv->spec.kernel},
                  {"stride", conv->spec.stride},
                  {"padding", conv->spec.padding},
                  {"bias", conv->spec.has_bias},
                  {"activation", activation_name(conv->activation)}};
        } else if (const auto* pool = std::get_if<MaxPoolLayer>(&layer)) {
            lj = {{"type", "maxpool"}, {"window", pool->window}, {"stride", pool->stride}};
        } else if (const auto* fc = std::get_if<FcLayer>(&layer)) {
            lj = {{"type", "fc"},
                  {"in_features", fc->spec.in_features},
                  {"out_features", fc->spec.out_features},
                  {"bias", fc->spec.has_bias},
                  {"activation", activation_name(fc->activation)}};
        } else {
            lj = {{"type", "activation"},
                  {"kind", activation_name(std::get<ActivationLayer>(layer).kind)}};
        }
        arr.push_back(std::move(lj));
    }
    return j.dump(2);
}

void save_weights_sidecar(const Model& model, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot write weights file " + path.string());
    const auto put = [&](const std::vector<float>& v) {
        f.write(reinterpret_cast<const char*>(v.data()),
                static_cast<std::streamsize>(v.size() * sizeof(float)));
    };
    for (const auto& layer : model.layers) {
        if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            put(conv->weights);
            put(conv->bias);
        } else if (const auto* fc = std::get_if<FcLayer>(&layer)) {
            put(fc->weights);
            put(fc->bias);
        }
    }
}

void load_weights_sidecar(Model& model, const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open weights file " + path.string());
    const auto take = [&](std::vector<float>& v, std::size_t n, const std::string& what) {
        v.resize(n);
        f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
        if (static_cast<std::size_t>(f.gcount()) != n * sizeof(float)) {
            throw ParseError("weights file " + path.string() + " truncated at " + what);
        }
    };
    std::size_t idx = 0;
    for (auto& layer : model.layers) {
        ++idx;
        const std::string where = "layer " + std::to_string(idx);
        if (auto* conv = std::get_if<ConvLayer>(&layer)) {
            take(conv->weights, static_cast<std::size_t>(conv->spec.weight_count()), where);
            if (conv->spec.has_bias) {
                take(conv->bias, static_cast<std::size_t>(conv->spec.out_channels), where);
            }
        } else if (auto* fc = std::get_if<FcLayer>(&layer)) {
            take(fc->weights, static_cast<std::size_t>(fc->spec.weight_count()), where);
            if (fc->spec.has_bias) {
                take(fc->bias, static_cast<std::size_t>(fc->spec.out_features), where);
            }
        }
    }
    f.peek();
    if (!f.eof()) throw ParseError("weights file " + path.string() + " has trailing bytes");
}

namespace {

int scaled_dim(int v, int divisor) {
    return std::max(1, (2 * v + divisor) / (2 * divisor)); // round to nearest
}

// Conv widths keep a floor of 32 (without ever growing) so channel
// partitioning still has enough rounds at desk scale for the limiting-factor
// asymmetry to be visible.
int scaled_width(int v, int divisor) {
    return std::min(v, std::max(32, scaled_dim(v, divisor)));
}

} // namespace

Model scale_model(const Model& model, int divisor) {
    if (divisor < 1) throw Error("scale divisor must be >= 1");
    if (divisor == 1) return model;
    constexpr int kMinSpatial = 4;

    // the last fc keeps its width (classifier)
    std::ptrdiff_t last_fc = -1;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        if (std::holds_alternative<FcLayer>(model.layers[i])) last_fc = static_cast<std::ptrdiff_t>(i);
    }

    Model out;
    out.name = model.name + "-div" + std::to_string(divisor);
    out.input = ShapeCHW{model.input.channels, scaled_dim(model.input.height, divisor),
                         scaled_dim(model.input.width, divisor)};

    ShapeCHW cur = out.input;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        if (const auto* conv = std::get_if<ConvLayer>(&model.layers[i])) {
            ConvLayer l = *conv;
            l.weights.clear();
            l.bias.clear();
            l.spec.in_channels = cur.channels;
            l.spec.out_channels = scaled_width(conv->spec.out_channels, divisor);
            if (l.spec.stride > 1 && l.spec.out_dim(cur.height) < kMinSpatial) {
                l.spec.stride = 1;
            }
            cur = ShapeCHW{l.spec.out_channels, l.spec.out_dim(cur.height),
                           l.spec.out_dim(cur.width)};
            out.layers.emplace_back(std::move(l));
        } else if (const auto* pool = std::get_if<MaxPoolLayer>(&model.layers[i])) {
            if (pool->out_dim(cur.height) < kMinSpatial || pool->out_dim(cur.width) < kMinSpatial) {
                continue; // keep enough rows for partitioning to mean something
            }
            cur = ShapeCHW{cur.channels, pool->out_dim(cur.height), pool->out_dim(cur.width)};
            out.layers.emplace_back(*pool);
        } else if (const auto* fc = std::get_if<FcLayer>(&model.layers[i])) {
            FcLayer l = *fc;
            l.weights.clear();
            l.bias.clear();
            l.spec.in_features = static_cast<int>(cur.volume());
            if (static_cast<std::ptrdiff_t>(i) != last_fc) {
                l.spec.out_features = scaled_dim(fc->spec.out_features, divisor);
            }
            cur = ShapeCHW{l.spec.out_features, 1, 1};
            out.layers.emplace_back(std::move(l));
        } else {
            out.layers.emplace_back(model.layers[i]);
        }
    }
    out.shape_chain();
    return out;
}

} // namespace teesim
