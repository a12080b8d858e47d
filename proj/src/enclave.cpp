#include "teesim/enclave.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

namespace teesim {

void EnclaveConfig::validate() const {
    if (page_bytes == 0 || (page_bytes & (page_bytes - 1)) != 0) {
        throw Error("page_bytes must be a power of two, got " + std::to_string(page_bytes));
    }
    if (secure_bytes < 2 * page_bytes) {
        throw Error("secure_bytes " + std::to_string(secure_bytes) + " must be at least two pages (" +
                    std::to_string(2 * page_bytes) + ")");
    }
    if (cost_fault < 0 || cost_evict < 0) throw Error("costs must be non-negative");
    if (link_pages_per_unit <= 0) throw Error("link_pages_per_unit must be positive");
}

PagingStats PagingStats::delta_since(const PagingStats& before) const {
    PagingStats d;
    d.faults = faults - before.faults;
    d.evictions = evictions - before.evictions;
    d.clean_evictions = clean_evictions - before.clean_evictions;
    d.dirty_evictions = dirty_evictions - before.dirty_evictions;
    d.resident_peak = resident_peak;
    d.total_cost = total_cost - before.total_cost;
    return d;
}

void LruPolicy::on_insert(std::uint64_t page) {
    order_.push_back(page);
    where_[page] = std::prev(order_.end());
}

void LruPolicy::on_touch(std::uint64_t page) {
    auto it = where_.find(page);
    order_.splice(order_.end(), order_, it->second);
}

std::uint64_t LruPolicy::pick_victim() {
    const std::uint64_t victim = order_.front();
    order_.pop_front();
    where_.erase(victim);
    return victim;
}

Enclave::Enclave(EnclaveConfig config, std::unique_ptr<EvictionPolicy> policy)
    : config_(config), policy_(std::move(policy)) {
    config_.validate();
}

BufferHandle Enclave::alloc(std::uint64_t length, std::string label) {
    if (length == 0) throw Error("alloc: length must be positive (" + label + ")");
    const std::uint64_t pages = (length + config_.page_bytes - 1) / config_.page_bytes;
    BufferHandle h;
    h.id = buffers_.size();
    h.base = next_page_ * config_.page_bytes;
    h.length = length;
    h.label = std::move(label);
    buffers_.push_back(BufferInfo{next_page_, pages});
    next_page_ += pages;
    return h;
}

void Enclave::access(const BufferHandle& buf, std::uint64_t offset, std::uint64_t length,
                     AccessKind kind) {
    if (length == 0) return;
    if (offset > buf.length || length > buf.length - offset) {
        throw BoundsError("access past end of buffer '" + buf.label + "': offset " +
                          std::to_string(offset) + " + length " + std::to_string(length) +
                          " > " + std::to_string(buf.length));
    }
    const std::uint64_t first = (buf.base + offset) / config_.page_bytes;
    const std::uint64_t last = (buf.base + offset + length - 1) / config_.page_bytes;
    for (std::uint64_t p = first; p <= last; ++p) touch(p, kind);
}

void Enclave::touch(std::uint64_t page, AccessKind kind) {
    if (recording_) trace_.push_back(PageAccess{kind, page});
    auto it = resident_.find(page);
    if (it != resident_.end()) {
        policy_->on_touch(page);
        if (kind == AccessKind::write) it->second = true;
        return;
    }
    stats_.faults += 1;
    stats_.total_cost += config_.cost_fault;
    {
        // attribute the fault to the owning buffer
        auto bit = std::upper_bound(buffers_.begin(), buffers_.end(), page,
                                    [](std::uint64_t p, const BufferInfo& b) { return p < b.first_page; });
        if (bit != buffers_.begin()) std::prev(bit)->faults += 1;
    }
    if (resident_.size() == capacity_pages()) evict_one();
    resident_.emplace(page, kind == AccessKind::write);
    policy_->on_insert(page);
    stats_.resident_peak = std::max<std::uint64_t>(stats_.resident_peak, resident_.size());
}

void Enclave::evict_one() {
    const std::uint64_t victim = policy_->pick_victim();
    auto it = resident_.find(victim);
    stats_.evictions += 1;
    if (it->second) {
        stats_.dirty_evictions += 1;
        stats_.total_cost += config_.cost_evict;
    } else {
        stats_.clean_evictions += 1;
    }
    resident_.erase(it);
}

std::uint64_t Enclave::faults_for(const BufferHandle& buf) const {
    return buffers_.at(buf.id).faults;
}

void dump_trace(std::ostream& os, const std::vector<PageAccess>& trace) {
    for (const auto& a : trace) {
        os << (a.kind == AccessKind::read ? 'r' : 'w') << ' ' << a.page << '\n';
    }
}

std::vector<PageAccess> parse_trace(std::istream& is) {
    std::vector<PageAccess> out;
    char kind;
    std::uint64_t page;
    while (is >> kind >> page) {
        if (kind != 'r' && kind != 'w') throw ParseError("trace: bad access kind");
        out.push_back(PageAccess{kind == 'r' ? AccessKind::read : AccessKind::write, page});
    }
    return out;
}

double link_time(std::uint64_t pages, int workers, double decode_pages_per_unit_per_worker,
                 double link_pages_per_unit) {
    if (workers < 1 || decode_pages_per_unit_per_worker <= 0 || link_pages_per_unit <= 0) {
        throw Error("link_time: rates and workers must be positive");
    }
    const double effective =
        std::min(link_pages_per_unit, workers * decode_pages_per_unit_per_worker);
    return static_cast<double>(pages) / effective;
}

} // namespace teesim
