#pragma once

#include <cstdint>
#include <iosfwd>
#include <list>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "teesim/errors.hpp"

namespace teesim {

enum class AccessKind { read, write };

/// Virtual range registered with the simulator. Ranges are page-aligned and
/// never overlap; only residency is bounded, the virtual space is not.
struct BufferHandle {
    std::uint64_t id = 0;
    std::uint64_t base = 0;   // virtual byte offset
    std::uint64_t length = 0; // requested bytes
    std::string label;
};

/// Receiver for memory accesses issued by instrumented executors. The
/// enclave simulator is the production sink; tests plug in counters.
class AccessSink {
public:
    virtual ~AccessSink() = default;
    virtual void access(const BufferHandle& buf, std::uint64_t offset, std::uint64_t length,
                        AccessKind kind) = 0;

    void read(const BufferHandle& buf, std::uint64_t offset, std::uint64_t length) {
        access(buf, offset, length, AccessKind::read);
    }
    void write(const BufferHandle& buf, std::uint64_t offset, std::uint64_t length) {
        access(buf, offset, length, AccessKind::write);
    }
};

struct EnclaveConfig {
    std::uint64_t secure_bytes = 28ull << 20;
    std::uint64_t page_bytes = 4096;
    double cost_fault = 1.0;          // transfer + decrypt + integrity check
    double cost_evict = 1.0;          // encrypt + write back a dirty page
    double link_pages_per_unit = 1.0; // decryption-link bandwidth

    void validate() const;
    std::uint64_t capacity_pages() const { return secure_bytes / page_bytes; }
};

struct PagingStats {
    std::uint64_t faults = 0;
    std::uint64_t evictions = 0;
    std::uint64_t clean_evictions = 0;
    std::uint64_t dirty_evictions = 0;
    std::uint64_t resident_peak = 0; // pages
    double total_cost = 0.0;

    /// Counter difference against an earlier snapshot; resident_peak keeps
    /// the later (global) value.
    PagingStats delta_since(const PagingStats& before) const;
};

struct PageAccess {
    AccessKind kind;
    std::uint64_t page;
    bool operator==(const PageAccess&) const = default;
};

/// Replacement policy over resident page ids. Strict LRU is the default; the
/// interface exists so CLOCK or others can be slotted in.
class EvictionPolicy {
public:
    virtual ~EvictionPolicy() = default;
    virtual void on_insert(std::uint64_t page) = 0;
    virtual void on_touch(std::uint64_t page) = 0;
    /// Selects and forgets the victim. Only called when non-empty.
    virtual std::uint64_t pick_victim() = 0;
};

class LruPolicy final : public EvictionPolicy {
public:
    void on_insert(std::uint64_t page) override;
    void on_touch(std::uint64_t page) override;
    std::uint64_t pick_victim() override;

private:
    std::list<std::uint64_t> order_; // front = LRU, back = MRU
    std::unordered_map<std::uint64_t, std::list<std::uint64_t>::iterator> where_;
};

/// Page-granular secure-memory simulator: demand paging with fault/eviction
/// counters and an abstract cost accumulator. Single-threaded; a trace is a
/// total order of accesses.
class Enclave : public AccessSink {
public:
    explicit Enclave(EnclaveConfig config,
                     std::unique_ptr<EvictionPolicy> policy = std::make_unique<LruPolicy>());

    BufferHandle alloc(std::uint64_t length, std::string label);

    void access(const BufferHandle& buf, std::uint64_t offset, std::uint64_t length,
                AccessKind kind) override;

    const PagingStats& stats() const { return stats_; }
    const EnclaveConfig& config() const { return config_; }
    std::uint64_t capacity_pages() const { return config_.capacity_pages(); }
    std::uint64_t resident_pages() const { return resident_.size(); }

    /// Faults attributed to one registered buffer.
    std::uint64_t faults_for(const BufferHandle& buf) const;

    void record_trace(bool on) { recording_ = on; }
    const std::vector<PageAccess>& trace() const { return trace_; }

private:
    struct BufferInfo {
        std::uint64_t first_page;
        std::uint64_t page_count;
        std::uint64_t faults = 0;
    };

    void touch(std::uint64_t page, AccessKind kind);
    void evict_one();

    EnclaveConfig config_;
    std::unique_ptr<EvictionPolicy> policy_;
    std::unordered_map<std::uint64_t, bool> resident_; // page -> dirty
    std::vector<BufferInfo> buffers_;
    std::uint64_t next_page_ = 0;
    PagingStats stats_;
    bool recording_ = false;
    std::vector<PageAccess> trace_;
};

/// Newline-delimited "r <page>" / "w <page>" dump for offline replay.
void dump_trace(std::ostream& os, const std::vector<PageAccess>& trace);
std::vector<PageAccess> parse_trace(std::istream& is);

/// Pipeline-bottleneck model of streaming `pages` through the decryption
/// link with `workers` decoding in parallel:
/// pages / min(link_pages_per_unit, workers * decode_pages_per_unit_per_worker).
double link_time(std::uint64_t pages, int workers, double decode_pages_per_unit_per_worker,
                 double link_pages_per_unit);

} // namespace teesim
