#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace teesim::testing {

bool close_rel(float a, float b, double tol) {
    const double denom = std::max({1.0, std::abs(static_cast<double>(a)),
                                   std::abs(static_cast<double>(b))});
    return std::abs(static_cast<double>(a) - b) <= tol * denom;
}

double max_rel_diff(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) return 1e30;
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({1.0, std::abs(static_cast<double>(a[i])),
                                       std::abs(static_cast<double>(b[i]))});
        m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]) / denom);
    }
    return m;
}

Tensor3D conv_bruteforce(const Tensor3D& input, const std::vector<float>& weights,
                         const std::vector<float>& bias, const ConvLayerSpec& spec) {
    const int C = spec.in_channels, N = spec.out_channels, K = spec.kernel;
    const int S = spec.stride, P = spec.padding;
    const int ph = input.height + 2 * P, pw = input.width + 2 * P;

    // materialize the zero-padded input
    Tensor3D padded(C, ph, pw);
    for (int c = 0; c < C; ++c) {
        for (int y = 0; y < input.height; ++y) {
            for (int x = 0; x < input.width; ++x) {
                padded.at(c, y + P, x + P) = input.at(c, y, x);
            }
        }
    }
    const int out_h = (ph - K) / S + 1, out_w = (pw - K) / S + 1;
    Tensor3D out(N, out_h, out_w);
    for (int n = 0; n < N; ++n) {
        for (int y = 0; y < out_h; ++y) {
            for (int x = 0; x < out_w; ++x) {
                double acc = spec.has_bias ? bias[n] : 0.0f;
                for (int c = 0; c < C; ++c) {
                    for (int ky = 0; ky < K; ++ky) {
                        for (int kx = 0; kx < K; ++kx) {
                            acc += static_cast<double>(padded.at(c, y * S + ky, x * S + kx)) *
                                   weights[((static_cast<std::size_t>(n) * C + c) * K + ky) * K + kx];
                        }
                    }
                }
                out.at(n, y, x) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

std::vector<float> fc_bruteforce(const std::vector<float>& input,
                                 const std::vector<float>& weights,
                                 const std::vector<float>& bias, int in_features,
                                 int out_features) {
    std::vector<float> out(static_cast<std::size_t>(out_features));
    for (int o = 0; o < out_features; ++o) {
        double acc = bias.empty() ? 0.0f : bias[o];
        for (int i = 0; i < in_features; ++i) {
            acc += static_cast<double>(weights[static_cast<std::size_t>(o) * in_features + i]) *
                   input[i];
        }
        out[o] = static_cast<float>(acc);
    }
    return out;
}

Tensor3D maxpool_bruteforce(const Tensor3D& input, int window, int stride) {
    const int out_h = (input.height - 1) / stride + 1;
    const int out_w = (input.width - 1) / stride + 1;
    Tensor3D out(input.channels, out_h, out_w);
    for (int c = 0; c < input.channels; ++c) {
        for (int y = 0; y < out_h; ++y) {
            for (int x = 0; x < out_w; ++x) {
                float best = -1e30f;
                for (int iy = y * stride; iy < y * stride + window; ++iy) {
                    for (int ix = x * stride; ix < x * stride + window; ++ix) {
                        if (iy < input.height && ix < input.width) {
                            best = std::max(best, input.at(c, iy, ix));
                        }
                    }
                }
                out.at(c, y, x) = best;
            }
        }
    }
    return out;
}

void matmul_triple_loop(const std::vector<float>& a, const std::vector<float>& b,
                        std::vector<float>& c, std::int64_t m, std::int64_t k, std::int64_t n,
                        float alpha, float beta) {
    for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < n; ++j) {
            double acc = 0;
            for (std::int64_t t = 0; t < k; ++t) {
                acc += static_cast<double>(a[i * k + t]) * b[t * n + j];
            }
            c[i * n + j] = static_cast<float>(alpha * acc + beta * c[i * n + j]);
        }
    }
}

void LruReplay::touch(std::uint64_t page, AccessKind kind) {
    auto it = std::find(order.begin(), order.end(), page);
    if (it != order.end()) {
        order.erase(it);
        order.push_back(page);
        if (kind == AccessKind::write) dirty[page] = true;
        return;
    }
    ++faults;
    if (order.size() == capacity) {
        const std::uint64_t victim = order.front();
        order.erase(order.begin());
        ++evictions;
        if (dirty[victim]) {
            ++dirty_evictions;
        } else {
            ++clean_evictions;
        }
        dirty.erase(victim);
    }
    order.push_back(page);
    dirty[page] = kind == AccessKind::write;
    resident_peak = std::max<std::uint64_t>(resident_peak, order.size());
}

void LruReplay::run(const std::vector<PageAccess>& trace) {
    for (const auto& a : trace) touch(a.page, a.kind);
}

std::uint64_t distinct_pages(const std::vector<PageAccess>& trace) {
    std::vector<std::uint64_t> pages;
    pages.reserve(trace.size());
    for (const auto& a : trace) pages.push_back(a.page);
    std::sort(pages.begin(), pages.end());
    pages.erase(std::unique(pages.begin(), pages.end()), pages.end());
    return pages.size();
}

void CountingSink::access(const BufferHandle& buf, std::uint64_t offset, std::uint64_t length,
                          AccessKind kind) {
    (void)offset;
    if (kind == AccessKind::read) {
        reads_[buf.id] += length;
    } else {
        writes_[buf.id] += length;
    }
}

std::uint64_t CountingSink::read_bytes(std::uint64_t id) const {
    auto it = reads_.find(id);
    return it == reads_.end() ? 0 : it->second;
}

std::uint64_t CountingSink::write_bytes(std::uint64_t id) const {
    auto it = writes_.find(id);
    return it == writes_.end() ? 0 : it->second;
}

BufferHandle fake_handle(std::uint64_t id, std::uint64_t length, std::string label) {
    BufferHandle h;
    h.id = id;
    h.base = id << 32; // far apart, never used for paging in counting sinks
    h.length = length;
    h.label = std::move(label);
    return h;
}

} // namespace teesim::testing
