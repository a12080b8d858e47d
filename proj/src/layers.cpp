#include "teesim/layers.hpp"

namespace teesim {

void ConvLayerSpec::validate() const {
    if (in_channels < 1 || out_channels < 1) {
        throw ShapeError("conv channels must be positive, got C=" + std::to_string(in_channels) +
                         " N=" + std::to_string(out_channels));
    }
    if (kernel < 1 || stride < 1 || padding < 0) {
        throw ShapeError("conv needs K>=1, S>=1, P>=0, got K=" + std::to_string(kernel) +
                         " S=" + std::to_string(stride) + " P=" + std::to_string(padding));
    }
}

int ConvLayerSpec::out_dim(int in_dim) const {
    const int padded = in_dim + 2 * padding - kernel;
    if (padded < 0) {
        throw ShapeError("conv kernel " + std::to_string(kernel) + " exceeds padded extent " +
                         std::to_string(in_dim + 2 * padding));
    }
    return padded / stride + 1;
}

void FcLayerSpec::validate() const {
    if (in_features < 1 || out_features < 1) {
        throw ShapeError("fc features must be positive, got in=" + std::to_string(in_features) +
                         " out=" + std::to_string(out_features));
    }
}

std::vector<ShapeCHW> Model::shape_chain() const {
    std::vector<ShapeCHW> chain;
    chain.reserve(layers.size() + 1);
    ShapeCHW cur = input;
    if (cur.channels < 1 || cur.height < 1 || cur.width < 1) {
        throw ShapeError("model input shape must be positive");
    }
    chain.push_back(cur);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string where = "layer " + std::to_string(i + 1);
        try {
            if (const auto* conv = std::get_if<ConvLayer>(&layers[i])) {
                conv->spec.validate();
                if (conv->spec.in_channels != cur.channels) {
                    throw ShapeError("expects " + std::to_string(conv->spec.in_channels) +
                                     " input channels, previous layer produces " +
                                     std::to_string(cur.channels));
                }
                cur = ShapeCHW{conv->spec.out_channels, conv->spec.out_dim(cur.height),
                               conv->spec.out_dim(cur.width)};
            } else if (const auto* pool = std::get_if<MaxPoolLayer>(&layers[i])) {
                if (pool->window < 1 || pool->stride < 1) {
                    throw ShapeError("pool window/stride must be positive");
                }
                if (pool->window > cur.height || pool->window > cur.width) {
                    throw ShapeError("pool window " + std::to_string(pool->window) +
                                     " exceeds input " + std::to_string(cur.height) + "x" +
                                     std::to_string(cur.width));
                }
                cur = ShapeCHW{cur.channels, pool->out_dim(cur.height), pool->out_dim(cur.width)};
            } else if (const auto* fc = std::get_if<FcLayer>(&layers[i])) {
                fc->spec.validate();
                if (static_cast<std::int64_t>(fc->spec.in_features) != cur.volume()) {
                    throw ShapeError("expects " + std::to_string(fc->spec.in_features) +
                                     " input features, previous layer produces " +
                                     std::to_string(cur.volume()));
                }
                cur = ShapeCHW{fc->spec.out_features, 1, 1};
            } else {
                // activation: shape preserved
            }
        } catch (const ShapeError& e) {
            throw ShapeError(where + ": " + e.what());
        }
        chain.push_back(cur);
    }
    return chain;
}

void Model::randomize_weights(std::uint64_t seed) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        Rng rng(seed ^ (0x51ed2701ull * (i + 1)));
        if (auto* conv = std::get_if<ConvLayer>(&layers[i])) {
            conv->weights.resize(static_cast<std::size_t>(conv->spec.weight_count()));
            for (auto& w : conv->weights) w = rng.next_float(-0.5f, 0.5f);
            conv->bias.assign(conv->spec.has_bias ? conv->spec.out_channels : 0, 0.0f);
            for (auto& b : conv->bias) b = rng.next_float(-0.5f, 0.5f);
        } else if (auto* fc = std::get_if<FcLayer>(&layers[i])) {
            fc->weights.resize(static_cast<std::size_t>(fc->spec.weight_count()));
            for (auto& w : fc->weights) w = rng.next_float(-0.5f, 0.5f);
            fc->bias.assign(fc->spec.has_bias ? fc->spec.out_features : 0, 0.0f);
            for (auto& b : fc->bias) b = rng.next_float(-0.5f, 0.5f);
        }
    }
}

std::size_t Model::weighted_layer_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) {
        if (std::holds_alternative<ConvLayer>(l) || std::holds_alternative<FcLayer>(l)) ++n;
    }
    return n;
}

const char* layer_type_name(const Layer& layer) {
    if (std::holds_alternative<ConvLayer>(layer)) return "conv";
    if (std::holds_alternative<MaxPoolLayer>(layer)) return "maxpool";
    if (std::holds_alternative<FcLayer>(layer)) return "fc";
    return "activation";
}

std::string activation_name(ActivationKind k) {
    return k == ActivationKind::relu ? "relu" : "linear";
}

std::optional<ActivationKind> activation_from_name(const std::string& s) {
    if (s == "relu") return ActivationKind::relu;
    if (s == "linear" || s == "none") return ActivationKind::none;
    return std::nullopt;
}

} // namespace teesim
