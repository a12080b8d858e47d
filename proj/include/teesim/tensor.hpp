#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "teesim/errors.hpp"
#include "teesim/rng.hpp"

namespace teesim {

/// Dense 3D array of float32 in channel-major order:
/// index(c, y, x) = c*H*W + y*W + x. One row of every channel at a fixed y
/// ("y-plane") is therefore a set of W-element strided runs, one per channel.
struct Tensor3D {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Tensor3D() = default;
    Tensor3D(int c, int h, int w);
    Tensor3D(int c, int h, int w, std::vector<float> values);

    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height + y) * width + x;
    }
    float at(int c, int y, int x) const { return data[index(c, y, x)]; }
    float& at(int c, int y, int x) { return data[index(c, y, x)]; }

    std::size_t size() const { return data.size(); }
    std::uint64_t bytes() const { return static_cast<std::uint64_t>(data.size()) * sizeof(float); }

    bool same_shape(const Tensor3D& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    void fill_random(Rng& rng, float lo = -0.5f, float hi = 0.5f);
};

} // namespace teesim
