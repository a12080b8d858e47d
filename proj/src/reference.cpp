#include "teesim/reference.hpp"

#include <algorithm>
#include <string>

namespace teesim {

Tensor3D conv2d_direct(const Tensor3D& input, std::span<const float> weights,
                       std::span<const float> bias, const ConvLayerSpec& spec) {
    spec.validate();
    if (input.channels != spec.in_channels) {
        throw ShapeError("conv2d_direct: input has " + std::to_string(input.channels) +
                         " channels, spec expects " + std::to_string(spec.in_channels));
    }
    if (static_cast<std::int64_t>(weights.size()) != spec.weight_count()) {
        throw ShapeError("conv2d_direct: weight array has " + std::to_string(weights.size()) +
                         " values, spec needs " + std::to_string(spec.weight_count()) + " (" +
                         std::to_string(spec.out_channels) + "x" + std::to_string(spec.in_channels) +
                         "x" + std::to_string(spec.kernel) + "x" + std::to_string(spec.kernel) + ")");
    }
    if (spec.has_bias && static_cast<int>(bias.size()) != spec.out_channels) {
        throw ShapeError("conv2d_direct: bias has " + std::to_string(bias.size()) +
                         " values, spec needs " + std::to_string(spec.out_channels));
    }

    const int C = spec.in_channels, N = spec.out_channels;
    const int K = spec.kernel, S = spec.stride, P = spec.padding;
    const int H = input.height, W = input.width;
    const int out_h = spec.out_dim(H), out_w = spec.out_dim(W);

    Tensor3D out(N, out_h, out_w);
    for (int n = 0; n < N; ++n) {
        const float b = spec.has_bias ? bias[n] : 0.0f;
        for (int y = 0; y < out_h; ++y) {
            for (int x = 0; x < out_w; ++x) {
                float acc = b;
                for (int c = 0; c < C; ++c) {
                    for (int ky = 0; ky < K; ++ky) {
                        const int iy = y * S + ky - P;
                        if (iy < 0 || iy >= H) continue;
                        for (int kx = 0; kx < K; ++kx) {
                            const int ix = x * S + kx - P;
                            if (ix < 0 || ix >= W) continue;
                            acc += input.at(c, iy, ix) *
                                   weights[((static_cast<std::size_t>(n) * C + c) * K + ky) * K + kx];
                        }
                    }
                }
                out.at(n, y, x) = acc;
            }
        }
    }
    return out;
}

std::vector<float> fc_direct(std::span<const float> input, std::span<const float> weights,
                             std::span<const float> bias, const FcLayerSpec& spec) {
    spec.validate();
    if (static_cast<int>(input.size()) != spec.in_features) {
        throw ShapeError("fc_direct: input length " + std::to_string(input.size()) +
                         " != in_features " + std::to_string(spec.in_features));
    }
    if (static_cast<std::int64_t>(weights.size()) != spec.weight_count()) {
        throw ShapeError("fc_direct: weight matrix has " + std::to_string(weights.size()) +
                         " values, spec needs " + std::to_string(spec.weight_count()));
    }
    if (spec.has_bias && static_cast<int>(bias.size()) != spec.out_features) {
        throw ShapeError("fc_direct: bias has " + std::to_string(bias.size()) +
                         " values, spec needs " + std::to_string(spec.out_features));
    }

    std::vector<float> out(static_cast<std::size_t>(spec.out_features));
    const std::size_t in_n = static_cast<std::size_t>(spec.in_features);
    for (int o = 0; o < spec.out_features; ++o) {
        float acc = spec.has_bias ? bias[o] : 0.0f;
        const float* row = weights.data() + static_cast<std::size_t>(o) * in_n;
        for (std::size_t i = 0; i < in_n; ++i) acc += row[i] * input[i];
        out[o] = acc;
    }
    return out;
}

Tensor3D maxpool_direct(const Tensor3D& input, int window, int stride) {
    if (window < 1 || stride < 1) throw ShapeError("maxpool: window/stride must be positive");
    if (window > input.height || window > input.width) {
        throw ShapeError("maxpool: window " + std::to_string(window) + " exceeds input " +
                         std::to_string(input.height) + "x" + std::to_string(input.width));
    }
    MaxPoolLayer p{window, stride};
    const int out_h = p.out_dim(input.height), out_w = p.out_dim(input.width);
    Tensor3D out(input.channels, out_h, out_w);
    for (int c = 0; c < input.channels; ++c) {
        for (int y = 0; y < out_h; ++y) {
            const int y_end = std::min(y * stride + window, input.height);
            for (int x = 0; x < out_w; ++x) {
                const int x_end = std::min(x * stride + window, input.width);
                float m = input.at(c, y * stride, x * stride);
                for (int iy = y * stride; iy < y_end; ++iy) {
                    for (int ix = x * stride; ix < x_end; ++ix) {
                        m = std::max(m, input.at(c, iy, ix));
                    }
                }
                out.at(c, y, x) = m;
            }
        }
    }
    return out;
}

void relu_inplace(std::span<float> values) {
    for (auto& v : values) v = std::max(v, 0.0f);
}

std::vector<float> model_infer_reference(const Model& model, const Tensor3D& input) {
    if (model.layers.empty()) throw ShapeError("model has no layers");
    model.shape_chain(); // validate up front so the index in errors is exact

    Tensor3D cur = input;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        try {
            if (const auto* conv = std::get_if<ConvLayer>(&model.layers[i])) {
                cur = conv2d_direct(cur, conv->weights, conv->bias, conv->spec);
                if (conv->activation == ActivationKind::relu) relu_inplace(cur.data);
            } else if (const auto* pool = std::get_if<MaxPoolLayer>(&model.layers[i])) {
                cur = maxpool_direct(cur, pool->window, pool->stride);
            } else if (const auto* fc = std::get_if<FcLayer>(&model.layers[i])) {
                auto v = fc_direct(cur.data, fc->weights, fc->bias, fc->spec);
                if (fc->activation == ActivationKind::relu) relu_inplace(v);
                cur = Tensor3D(fc->spec.out_features, 1, 1, std::move(v));
            } else if (const auto* act = std::get_if<ActivationLayer>(&model.layers[i])) {
                if (act->kind == ActivationKind::relu) relu_inplace(cur.data);
            }
        } catch (const ShapeError& e) {
            throw ShapeError("layer " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return cur.data;
}

} // namespace teesim
