#include "teesim/gemm.hpp"

#include <algorithm>
#include <string>
#include <thread>
#include <vector>

namespace teesim {

namespace {

void check_shapes(const MatView& a, const MatView& b, const MutMatView& c) {
    if (a.cols != b.rows || c.rows != a.rows || c.cols != b.cols) {
        throw ShapeError("gemm: A " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                         " * B " + std::to_string(b.rows) + "x" + std::to_string(b.cols) +
                         " -> C " + std::to_string(c.rows) + "x" + std::to_string(c.cols));
    }
}

inline void trace_span(AccessSink* sink, const GemmOperandTrace& op, std::uint64_t elem_off,
                       std::uint64_t elem_len, AccessKind kind) {
    if (sink && op.buf) {
        sink->access(*op.buf, (op.elem_base + elem_off) * sizeof(float), elem_len * sizeof(float),
                     kind);
    }
}

void scale_row(MutMatView c, std::int64_t i, float beta) {
    float* row = c.data + static_cast<std::size_t>(i) * c.stride;
    if (beta == 0.0f) {
        std::fill(row, row + c.cols, 0.0f);
    } else if (beta != 1.0f) {
        for (std::int64_t j = 0; j < c.cols; ++j) row[j] *= beta;
    }
}

void gemm_rows(MatView a, MatView b, MutMatView c, float alpha, float beta, int block,
               std::int64_t i_begin, std::int64_t i_end, const GemmTrace* trace) {
    AccessSink* sink = trace ? trace->sink : nullptr;
    for (std::int64_t i = i_begin; i < i_end; ++i) {
        scale_row(c, i, beta);
        if (sink) {
            trace_span(sink, trace->c, static_cast<std::uint64_t>(i) * c.stride,
                       static_cast<std::uint64_t>(c.cols), AccessKind::write);
        }
    }
    for (std::int64_t i0 = i_begin; i0 < i_end; i0 += block) {
        const std::int64_t i1 = std::min<std::int64_t>(i0 + block, i_end);
        for (std::int64_t k0 = 0; k0 < a.cols; k0 += block) {
            const std::int64_t k1 = std::min<std::int64_t>(k0 + block, a.cols);
            for (std::int64_t j0 = 0; j0 < c.cols; j0 += block) {
                const std::int64_t j1 = std::min<std::int64_t>(j0 + block, c.cols);
                for (std::int64_t i = i0; i < i1; ++i) {
                    if (sink) {
                        trace_span(sink, trace->a, static_cast<std::uint64_t>(i) * a.stride + k0,
                                   static_cast<std::uint64_t>(k1 - k0), AccessKind::read);
                    }
                    float* crow = c.data + static_cast<std::size_t>(i) * c.stride;
                    for (std::int64_t k = k0; k < k1; ++k) {
                        const float aik = alpha * a.at(i, k);
                        const float* brow = b.data + static_cast<std::size_t>(k) * b.stride;
                        if (sink) {
                            trace_span(sink, trace->b, static_cast<std::uint64_t>(k) * b.stride + j0,
                                       static_cast<std::uint64_t>(j1 - j0), AccessKind::read);
                        }
                        for (std::int64_t j = j0; j < j1; ++j) crow[j] += aik * brow[j];
                    }
                    if (sink) {
                        trace_span(sink, trace->c, static_cast<std::uint64_t>(i) * c.stride + j0,
                                   static_cast<std::uint64_t>(j1 - j0), AccessKind::read);
                        trace_span(sink, trace->c, static_cast<std::uint64_t>(i) * c.stride + j0,
                                   static_cast<std::uint64_t>(j1 - j0), AccessKind::write);
                    }
                }
            }
        }
    }
}

} // namespace

void gemm(MatView a, MatView b, MutMatView c, float alpha, float beta, int block, int threads,
          const GemmTrace* trace) {
    check_shapes(a, b, c);
    if (block < 1) throw Error("gemm: block must be positive");
    if (trace && trace->sink && threads != 1) {
        throw Error("gemm: traced execution must be single-threaded");
    }
    if (threads <= 1 || c.rows < 2 * block) {
        gemm_rows(a, b, c, alpha, beta, block, 0, c.rows, trace);
        return;
    }
    // split row blocks across workers; each C row has exactly one writer
    const std::int64_t nblocks = (c.rows + block - 1) / block;
    const int nthreads = static_cast<int>(std::min<std::int64_t>(threads, nblocks));
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
            for (std::int64_t blk = t; blk < nblocks; blk += nthreads) {
                const std::int64_t lo = blk * block;
                const std::int64_t hi = std::min<std::int64_t>(lo + block, c.rows);
                gemm_rows(a, b, c, alpha, beta, block, lo, hi, nullptr);
            }
        });
    }
    for (auto& th : pool) th.join();
}

void gemm(const Matrix& a, const Matrix& b, Matrix& c_inout, float alpha, float beta) {
    gemm(MatView::of(a), MatView::of(b), MutMatView::of(c_inout), alpha, beta);
}

void gemm_row_order_traced(MatView a, MatView b, MutMatView c, float alpha, float beta,
                           const GemmTrace& trace) {
    check_shapes(a, b, c);
    AccessSink* sink = trace.sink;
    for (std::int64_t i = 0; i < c.rows; ++i) {
        scale_row(c, i, beta);
        if (sink) {
            trace_span(sink, trace.c, static_cast<std::uint64_t>(i) * c.stride,
                       static_cast<std::uint64_t>(c.cols), AccessKind::write);
        }
        if (sink) {
            trace_span(sink, trace.a, static_cast<std::uint64_t>(i) * a.stride,
                       static_cast<std::uint64_t>(a.cols), AccessKind::read);
        }
        float* crow = c.data + static_cast<std::size_t>(i) * c.stride;
        for (std::int64_t k = 0; k < a.cols; ++k) {
            const float aik = alpha * a.at(i, k);
            const float* brow = b.data + static_cast<std::size_t>(k) * b.stride;
            if (sink) {
                trace_span(sink, trace.b, static_cast<std::uint64_t>(k) * b.stride,
                           static_cast<std::uint64_t>(b.cols), AccessKind::read);
            }
            for (std::int64_t j = 0; j < c.cols; ++j) crow[j] += aik * brow[j];
            if (sink) {
                trace_span(sink, trace.c, static_cast<std::uint64_t>(i) * c.stride,
                           static_cast<std::uint64_t>(c.cols), AccessKind::read);
                trace_span(sink, trace.c, static_cast<std::uint64_t>(i) * c.stride,
                           static_cast<std::uint64_t>(c.cols), AccessKind::write);
            }
        }
    }
}

} // namespace teesim
