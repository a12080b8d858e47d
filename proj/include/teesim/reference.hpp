#pragma once

#include <span>
#include <vector>

#include "teesim/layers.hpp"
#include "teesim/tensor.hpp"

namespace teesim {

/// Direct convolution, the ground truth for every other conv path.
/// out[n][y][x] = bias[n] + sum_{c,ky,kx} in_padded[c][y*S+ky][x*S+kx] * w[n][c][ky][kx]
/// with zero padding. Weights are n-major (N x C x K x K); bias may be empty.
Tensor3D conv2d_direct(const Tensor3D& input, std::span<const float> weights,
                       std::span<const float> bias, const ConvLayerSpec& spec);

/// out = W * input + bias. Weights row-major (out x in); bias may be empty.
std::vector<float> fc_direct(std::span<const float> input, std::span<const float> weights,
                             std::span<const float> bias, const FcLayerSpec& spec);

Tensor3D maxpool_direct(const Tensor3D& input, int window, int stride);

void relu_inplace(std::span<float> values);

/// Sequential application of the per-layer reference paths. Deterministic;
/// shape errors carry the 1-based layer index.
std::vector<float> model_infer_reference(const Model& model, const Tensor3D& input);

} // namespace teesim
