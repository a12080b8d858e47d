#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "teesim/errors.hpp"
#include "teesim/tensor.hpp"

namespace teesim {

/// Square-kernel 2D convolution parameters. Stride and padding apply to both
/// spatial dimensions; padding is zero-fill.
struct ConvLayerSpec {
    int in_channels = 0;  // C
    int out_channels = 0; // N
    int kernel = 1;       // K
    int stride = 1;       // S
    int padding = 0;      // P
    bool has_bias = true;

    void validate() const;
    // floor((H + 2P - K)/S) + 1; throws ShapeError if < 1.
    int out_dim(int in_dim) const;
    std::int64_t weight_count() const {
        return static_cast<std::int64_t>(out_channels) * in_channels * kernel * kernel;
    }
};

struct FcLayerSpec {
    int in_features = 0;
    int out_features = 0;
    bool has_bias = true;

    void validate() const;
    std::int64_t weight_count() const {
        return static_cast<std::int64_t>(out_features) * in_features;
    }
};

enum class ActivationKind { none, relu };

struct ConvLayer {
    ConvLayerSpec spec;
    std::vector<float> weights; // N x C x K x K, n-major
    std::vector<float> bias;    // N (empty when !has_bias)
    ActivationKind activation = ActivationKind::none;
};

/// Ceil-mode max pooling: out = floor((H-1)/stride) + 1, maxing over the
/// in-bounds part of each window. Even extents halve exactly; odd extents
/// round up (225 -> 113), matching the bundled model geometry.
struct MaxPoolLayer {
    int window = 2;
    int stride = 2;

    int out_dim(int in_dim) const { return (in_dim - 1) / stride + 1; }
};

struct FcLayer {
    FcLayerSpec spec;
    std::vector<float> weights; // out x in, row-major
    std::vector<float> bias;    // out (empty when !has_bias)
    ActivationKind activation = ActivationKind::none;
};

struct ActivationLayer {
    ActivationKind kind = ActivationKind::relu;
};

using Layer = std::variant<ConvLayer, MaxPoolLayer, FcLayer, ActivationLayer>;

struct ShapeCHW {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::int64_t volume() const {
        return static_cast<std::int64_t>(channels) * height * width;
    }
};

struct Model {
    std::string name;
    ShapeCHW input;
    std::vector<Layer> layers;

    /// Walks the layer chain from the input shape, checking adjacent layers
    /// are shape-compatible. Returns the shape before each layer plus the
    /// final shape (size layers.size()+1). Throws ShapeError with the
    /// 1-based layer index on mismatch.
    std::vector<ShapeCHW> shape_chain() const;

    /// Fills every weight/bias array from the seed (one substream per layer).
    void randomize_weights(std::uint64_t seed);

    std::size_t weighted_layer_count() const;
};

const char* layer_type_name(const Layer& layer);
std::string activation_name(ActivationKind k);
std::optional<ActivationKind> activation_from_name(const std::string& s);

} // namespace teesim
