#pragma once

#include <cstdint>

#include "teesim/enclave.hpp"
#include "teesim/matrix.hpp"

namespace teesim {

/// Where a GEMM operand lives in simulated memory. `elem_base` is the element
/// offset of the view's origin inside the buffer; views of sub-blocks just
/// shift it.
struct GemmOperandTrace {
    const BufferHandle* buf = nullptr;
    std::uint64_t elem_base = 0;
};

struct GemmTrace {
    AccessSink* sink = nullptr;
    GemmOperandTrace a, b, c;
};

inline constexpr int kGemmBlock = 64;

/// C <- alpha*A*B + beta*C, blocked at a fixed block size. For every output
/// element the k-contributions are applied in ascending order, so the result
/// is bit-identical to gemm_row_order_traced. `threads` parallelizes over
/// row blocks (disjoint C rows, deterministic); traced calls must be
/// single-threaded.
void gemm(MatView a, MatView b, MutMatView c, float alpha, float beta, int block = kGemmBlock,
          int threads = 1, const GemmTrace* trace = nullptr);

/// Convenience on whole matrices.
void gemm(const Matrix& a, const Matrix& b, Matrix& c_inout, float alpha, float beta);

/// Same arithmetic as gemm, but the output is produced row by row and each
/// output row re-reads all of B, the access pattern that thrashes when B
/// exceeds secure memory.
void gemm_row_order_traced(MatView a, MatView b, MutMatView c, float alpha, float beta,
                           const GemmTrace& trace);

} // namespace teesim
