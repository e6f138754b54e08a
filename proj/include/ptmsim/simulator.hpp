#pragma once

#include <memory>

#include "ptmsim/config.hpp"
#include "ptmsim/metrics.hpp"
#include "ptmsim/workload.hpp"

namespace ptmsim {

struct RunResult {
    std::vector<MetricsRow> rows;
    RunSummary summary;
};

/// Owns all simulator state and the per-minute event loop for one
/// scenario run. The whole guest frame pool is identity-mapped in the
/// IOMMU at construction (io page n -> frame n), so DMA reaches exactly
/// the pages the type policy currently permits.
class Simulator {
public:
    explicit Simulator(const RunConfig& cfg);

    /// Executes the configured duration and returns one row per minute
    /// plus the summary. Deterministic for a fixed seed and config.
    RunResult run();

    /// Runs a single minute (incremental driving for tests).
    MetricsRow run_minute(uint32_t minute);
    RunSummary make_summary() const;

    FrameTable& frames() { return frames_; }
    BuddyAllocator& allocator() { return *alloc_; }
    IommuModel& iommu() { return *iommu_; }
    TypeGuard& guard() { return *guard_; }
    PtCache& cache() { return *cache_; }
    Workload& workload() { return *workload_; }
    StepMeter& meter() { return meter_; }
    const RunConfig& config() const { return cfg_; }

    /// Full invariant sweep; throws SimAbort with a diagnostic on any
    /// violation. Runs at every minute boundary.
    void audit_all() const;

private:
    void audit_refcounts() const;
    void audit_conservation() const;

    RunConfig cfg_;
    FrameTable frames_;
    StepMeter meter_;
    std::unique_ptr<IommuModel> iommu_;
    std::unique_ptr<TypeGuard> guard_;
    std::unique_ptr<BuddyAllocator> alloc_;
    std::unique_ptr<PtCache> cache_;
    std::unique_ptr<Workload> workload_;

    struct Snapshot {
        uint64_t hits = 0;
        uint64_t misses = 0;
        uint64_t flushes_total = 0;
        uint64_t flushed_entries = 0;
        uint64_t dma_blocked = 0;
        uint64_t pt_flushes = 0;
        uint64_t fallbacks = 0;
    };
    Snapshot prev_;

    struct PostWarmupAccum {
        uint32_t minutes = 0;
        double miss_rate_sum = 0.0;
        uint64_t flushes_pt = 0;
        std::array<uint64_t, 3> alloc_sum{};
        std::array<uint64_t, 3> alloc_count{};
        std::array<uint64_t, 3> dealloc_sum{};
        std::array<uint64_t, 3> dealloc_count{};
    };
    PostWarmupAccum warm_;
    std::array<uint64_t, kCostKindCount> step_cost_by_kind_{};
    uint64_t step_cost_total_ = 0;
    static constexpr uint32_t kWarmupMinutes = 2;
};

}  // namespace ptmsim
