#pragma once

#include <array>
#include <cstdint>
#include <queue>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "ptmsim/pt_cache.hpp"

namespace ptmsim {

/// Per-process page-table shape: one top-level page plus the configured
/// middle/bottom counts. A directory must reference at least its children,
/// so l3_pages >= l2_pages >= 1.
struct ProcessShape {
    uint32_t l2_pages = 4;
    uint32_t l3_pages = 16;

    uint32_t total() const { return 1 + l2_pages + l3_pages; }
};

struct LifetimeModel {
    enum class Kind { Fixed, Exponential } kind = Kind::Fixed;
    uint64_t fixed_ms = 3000;
    double mean_ms = 30000.0;
    uint64_t cap_ms = 300000;
};

struct DmaProfile {
    enum class AddrDist { Uniform, Zipf } dist = AddrDist::Uniform;
    uint32_t per_minute = 10000;
    uint32_t working_set = 128;
    double write_fraction = 0.3;
    double zipf_s = 1.0;
};

struct WorkloadConfig {
    uint32_t procs_per_minute = 542;
    ProcessShape shape;
    LifetimeModel lifetime;
    enum class Schedule { Grid, UniformRandom } schedule = Schedule::Grid;
    DmaProfile dma;
    uint32_t data_entries_per_l3 = 4;
};

enum class ControlAction : uint8_t {
    EnableCache,
    DisableCache,
    ShrinkCount,
    ShrinkPercent,
    SetThreshold,
};

/// One scripted runtime control, the simulator analog of poking the
/// cache's virtual files.
struct ScriptedControl {
    uint32_t minute = 0;
    ControlAction action = ControlAction::EnableCache;
    std::optional<uint32_t> count;
    std::optional<double> ratio;
};

enum class EventKind : uint8_t { Control, Exit, Create, Dma };

struct Event {
    uint64_t tick = 0;     // absolute simulated milliseconds
    uint8_t priority = 0;  // control 0, exit 1, create 2, dma 3
    uint64_t seq = 0;
    EventKind kind = EventKind::Dma;
    uint64_t pid = 0;
    uint64_t lifetime_ms = 0;
    uint32_t io_page = 0;
    bool is_write = false;
    ScriptedControl control;
};

constexpr uint64_t kTicksPerMinute = 60000;

/// Deterministic generator and applier of process churn and DMA traffic.
/// All randomness flows through one seeded stream consumed in a fixed
/// order, so the event sequence is a pure function of (seed, config).
class Workload {
public:
    struct MinuteCounters {
        uint32_t created = 0;
        uint32_t exited = 0;
        std::array<uint64_t, 3> alloc_cost_sum{};
        std::array<uint32_t, 3> alloc_count{};
        std::array<uint64_t, 3> dealloc_cost_sum{};
        std::array<uint32_t, 3> dealloc_count{};
    };

    struct Totals {
        uint64_t created = 0;
        uint64_t exited = 0;
        uint64_t fallback_allocs = 0;
        /// Largest (fallback cost - coarse-path cost of the same request)
        /// seen; stays within the configured fallback overhead budget.
        int64_t max_fallback_excess = 0;
        bool any_fallback = false;
    };

    Workload(FrameTable& frames, BuddyAllocator& alloc, TypeGuard& guard,
             PtCache& cache, IommuModel& iommu, StepMeter& meter,
             const CostModel& costs, WorkloadConfig cfg, uint64_t seed,
             std::vector<ScriptedControl> controls, std::vector<FrameId> data_pool);

    /// Ordered events of one simulated minute: scripted controls, process
    /// creations at the configured rate, exits whose lifetimes elapse
    /// within the minute, and DMA translations per the profile.
    std::vector<Event> minute_events(uint32_t minute);

    void apply(const Event& ev);

    uint64_t create_process(uint64_t pid);
    void exit_process(uint64_t pid);

    MinuteCounters take_minute_counters();
    const Totals& totals() const { return totals_; }
    size_t live_processes() const { return live_.size(); }

    /// Every held frame must sit in a validated page-table state of its
    /// level; every data-pool frame stays plain writable.
    void audit_live() const;

    /// Frames currently held by live processes plus the data pool (for
    /// conservation sweeps).
    std::vector<FrameId> held_frames() const;

private:
    struct LiveProcess {
        FrameId l1;
        std::vector<FrameId> l2;
        std::vector<FrameId> l3;
    };
    struct PendingExit {
        uint64_t tick;
        uint64_t order;
        uint64_t pid;
        bool operator>(const PendingExit& o) const {
            return std::tie(tick, order) > std::tie(o.tick, o.order);
        }
    };

    FrameId acquire_pt_frame(PageLevel level, bool* was_fallback,
                             uint64_t* fallback_alloc_cost);
    void finish_fallback_audit(FrameId frame, uint64_t actual_cost,
                               uint64_t alloc_cost, uint32_t present_entries);
    uint64_t draw_lifetime_ms();
    uint32_t draw_io_page();

    FrameTable& frames_;
    BuddyAllocator& alloc_;
    TypeGuard& guard_;
    PtCache& cache_;
    IommuModel& iommu_;
    StepMeter& meter_;
    const CostModel& costs_;
    WorkloadConfig cfg_;

    std::mt19937_64 rng_;
    std::vector<ScriptedControl> controls_;
    std::vector<FrameId> data_pool_;
    std::vector<double> zipf_cdf_;
    size_t data_cursor_ = 0;

    std::priority_queue<PendingExit, std::vector<PendingExit>, std::greater<>> pending_exits_;
    std::unordered_map<uint64_t, LiveProcess> live_;
    uint64_t next_pid_ = 1;
    uint64_t seq_ = 0;

    MinuteCounters minute_;
    Totals totals_;
};

}  // namespace ptmsim
