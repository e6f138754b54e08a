#pragma once

#include <array>
#include <forward_list>
#include <optional>
#include <unordered_set>

#include "ptmsim/buddy.hpp"
#include "ptmsim/type_guard.hpp"

namespace ptmsim {

struct CacheConfig {
    std::array<uint32_t, 3> initial_counts = {8, 32, 160};  // L1, L2, L3
    std::optional<uint32_t> threshold_count;
    /// Cached semi-writable pages over live page-table pages.
    std::optional<double> threshold_proportion;
    bool enabled_at_boot = false;
};

struct CacheStats {
    std::array<uint32_t, 3> cached = {0, 0, 0};
    uint64_t pops = 0;
    uint64_t pushes = 0;
    uint64_t fallbacks = 0;

    uint32_t total_cached() const { return cached[0] + cached[1] + cached[2]; }
    uint64_t bytes() const { return uint64_t(total_cached()) * kFrameBytes; }
};

struct ShrinkSpec {
    enum class Kind { ByCount, ByPercent } kind = Kind::ByCount;
    uint32_t count = 0;
    double percent = 0.0;  // in [0, 1]

    static ShrinkSpec by_count(uint32_t n) { return {Kind::ByCount, n, 0.0}; }
    static ShrinkSpec by_percent(double p) { return {Kind::ByPercent, 0, p}; }
};

/// Per-level LIFO lists of semi-writable frames serving page-table
/// (de)allocations in constant time. Push and pop touch only the head;
/// the stored identity is the physical frame id.
class PtCache {
public:
    PtCache(FrameTable& frames, BuddyAllocator& alloc, TypeGuard& guard,
            StepMeter& meter, const CostModel& costs, CacheConfig cfg);

    /// Bulk-allocates the requested pages, converts them writable ->
    /// semi-writable in one batched hypercall, distributes them across the
    /// level lists, and switches the guard to fine-grained validation.
    Status init(std::array<uint32_t, 3> counts);

    /// Constant-cost head pop. Err::Empty signals the caller to take the
    /// fallback path (counted, not an error of the run).
    Result<FrameId> pop(PageLevel level);

    /// Constant-cost head push of a freshly devalidated semi-writable frame.
    Status push(PageLevel level, FrameId frame);

    /// Releases up to the requested number of cached pages (largest list
    /// first): one batched semi-writable -> writable conversion, then the
    /// frames go back to the system allocator. Returns the count released.
    Result<uint32_t> shrink(ShrinkSpec spec);

    void set_threshold(std::optional<uint32_t> count, std::optional<double> proportion);
    /// Shrinks down to the configured threshold when exceeded; returns the
    /// count released.
    uint32_t auto_shrink_check();

    Status enable();
    Status disable();
    bool enabled() const { return enabled_; }

    const CacheStats& stats() const { return stats_; }
    const CacheConfig& config() const { return cfg_; }
    bool contains(FrameId f) const { return members_.count(f.index) != 0; }

    /// Every cached frame must be semi-writable with refcount zero and
    /// absent from the allocator's free lists. Throws SimAbort otherwise.
    void audit() const;

private:
    uint32_t release_frames(uint32_t k);

    FrameTable& frames_;
    BuddyAllocator& alloc_;
    TypeGuard& guard_;
    StepMeter& meter_;
    const CostModel& costs_;
    CacheConfig cfg_;

    std::array<std::forward_list<FrameId>, 3> lists_;
    std::unordered_set<uint32_t> members_;
    CacheStats stats_;
    bool enabled_ = false;
};

}  // namespace ptmsim
