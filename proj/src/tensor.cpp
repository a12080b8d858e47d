#include "teesim/tensor.hpp"

#include <string>

namespace teesim {

namespace {
std::size_t checked_volume(int c, int h, int w) {
    if (c < 1 || h < 1 || w < 1) {
        throw ShapeError("tensor dims must be positive, got " + std::to_string(c) + "x" +
                         std::to_string(h) + "x" + std::to_string(w));
    }
    return static_cast<std::size_t>(c) * static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
}
} // namespace

Tensor3D::Tensor3D(int c, int h, int w)
    : channels(c), height(h), width(w), data(checked_volume(c, h, w), 0.0f) {}

Tensor3D::Tensor3D(int c, int h, int w, std::vector<float> values)
    : channels(c), height(h), width(w), data(std::move(values)) {
    if (data.size() != checked_volume(c, h, w)) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) + " != " +
                         std::to_string(c) + "*" + std::to_string(h) + "*" + std::to_string(w));
    }
}

void Tensor3D::fill_random(Rng& rng, float lo, float hi) {
    for (auto& v : data) v = rng.next_float(lo, hi);
}

} // namespace teesim
