#include "ptmsim/simulator.hpp"

#include <algorithm>
#include <string>

namespace ptmsim {

Simulator::Simulator(const RunConfig& cfg)
    : cfg_(cfg), frames_(cfg.pool_frames, cfg.entries) {
    IommuConfig icfg = cfg_.iommu;
    icfg.walk_cost = cfg_.costs.walk;
    iommu_ = std::make_unique<IommuModel>(frames_, icfg);
    guard_ = std::make_unique<TypeGuard>(frames_, *iommu_, meter_, cfg_.costs, cfg_.scheme);
    alloc_ = std::make_unique<BuddyAllocator>(frames_, meter_, cfg_.costs, cfg_.max_order);

    CacheConfig ccfg;
    ccfg.initial_counts = cfg_.cache_initial;
    ccfg.threshold_count = cfg_.threshold_count;
    ccfg.threshold_proportion = cfg_.threshold_proportion;
    cache_ = std::make_unique<PtCache>(frames_, *alloc_, *guard_, meter_, cfg_.costs, ccfg);

    // Identity map: the guest's whole pool is reachable by DMA at io page
    // n == frame n, with perms tracking the frame's type.
    for (uint32_t i = 0; i < frames_.pool_size(); ++i) {
        Status st = iommu_->map_io(0, i, FrameId(i));
        if (!st.ok()) throw SimAbort("identity mapping setup failed");
    }

    std::vector<FrameId> data_pool;
    data_pool.reserve(cfg_.data_pool_pages);
    for (uint32_t i = 0; i < cfg_.data_pool_pages; ++i) {
        auto got = alloc_->alloc_page();
        if (!got.ok()) throw SimAbort("pool too small for the data pool");
        data_pool.push_back(got.value());
    }

    std::vector<ScriptedControl> controls;
    if (cfg_.scenario == Scenario::PreEnabled) {
        controls.push_back({0, ControlAction::EnableCache, {}, {}});
    } else if (cfg_.scenario == Scenario::DynEnabled) {
        controls.push_back({cfg_.enable_at_minute, ControlAction::EnableCache, {}, {}});
    }
    controls.insert(controls.end(), cfg_.events.begin(), cfg_.events.end());

    workload_ = std::make_unique<Workload>(frames_, *alloc_, *guard_, *cache_, *iommu_,
                                           meter_, cfg_.costs, cfg_.workload, cfg_.seed,
                                           std::move(controls), std::move(data_pool));

    // Setup costs are not part of any simulated minute.
    meter_.reset();
}

MetricsRow Simulator::run_minute(uint32_t minute) {
    auto events = workload_->minute_events(minute);
    for (const Event& ev : events) workload_->apply(ev);

    const IotlbStats& io = iommu_->stats();
    const TypeGuard::Stats& gs = guard_->stats();
    const CacheStats& cs = cache_->stats();
    Workload::MinuteCounters wc = workload_->take_minute_counters();

    MetricsRow row;
    row.minute = minute;
    row.flushes_pt = gs.pt_flush_events - prev_.pt_flushes;
    uint64_t flushes_total_delta = io.flushes_total - prev_.flushes_total;
    row.flushes_other = flushes_total_delta - row.flushes_pt;
    row.flushed_entries = io.flushed_entries - prev_.flushed_entries;
    row.iotlb_hits = io.hits - prev_.hits;
    row.iotlb_misses = io.misses - prev_.misses;
    row.miss_rate = double(row.iotlb_misses) /
                    double(std::max<uint64_t>(1, row.iotlb_hits + row.iotlb_misses));
    row.dma_faults_blocked = io.dma_blocked - prev_.dma_blocked;
    for (size_t lv = 0; lv < 3; ++lv) {
        row.alloc_cost_avg[lv] =
            wc.alloc_count[lv] ? double(wc.alloc_cost_sum[lv]) / wc.alloc_count[lv] : 0.0;
        row.dealloc_cost_avg[lv] =
            wc.dealloc_count[lv] ? double(wc.dealloc_cost_sum[lv]) / wc.dealloc_count[lv]
                                 : 0.0;
    }
    row.cache_l1 = cs.cached[0];
    row.cache_l2 = cs.cached[1];
    row.cache_l3 = cs.cached[2];
    row.cache_bytes = cs.bytes();
    row.fallbacks = cs.fallbacks - prev_.fallbacks;
    row.processes_created = wc.created;
    row.processes_exited = wc.exited;

    prev_.hits = io.hits;
    prev_.misses = io.misses;
    prev_.flushes_total = io.flushes_total;
    prev_.flushed_entries = io.flushed_entries;
    prev_.dma_blocked = io.dma_blocked;
    prev_.pt_flushes = gs.pt_flush_events;
    prev_.fallbacks = cs.fallbacks;

    if (minute >= kWarmupMinutes) {
        warm_.minutes += 1;
        warm_.miss_rate_sum += row.miss_rate;
        warm_.flushes_pt += row.flushes_pt;
        for (size_t lv = 0; lv < 3; ++lv) {
            warm_.alloc_sum[lv] += wc.alloc_cost_sum[lv];
            warm_.alloc_count[lv] += wc.alloc_count[lv];
            warm_.dealloc_sum[lv] += wc.dealloc_cost_sum[lv];
            warm_.dealloc_count[lv] += wc.dealloc_count[lv];
        }
    }

    // Per-minute meter epoch.
    StepMeter snap = meter_.snapshot();
    step_cost_total_ += snap.total();
    for (size_t k = 0; k < kCostKindCount; ++k) {
        step_cost_by_kind_[k] += snap.category(static_cast<CostKind>(k));
    }
    meter_.reset();

    audit_all();
    return row;
}

RunResult Simulator::run() {
    RunResult result;
    result.rows.reserve(cfg_.minutes);
    for (uint32_t m = 0; m < cfg_.minutes; ++m) {
        result.rows.push_back(run_minute(m));
    }
    result.summary = make_summary();
    return result;
}

RunSummary Simulator::make_summary() const {
    RunSummary s;
    s.scenario = to_string(cfg_.scenario);
    s.seed = cfg_.seed;
    s.minutes = cfg_.minutes;
    s.warmup_minutes = kWarmupMinutes;

    const IotlbStats& io = iommu_->stats();
    const TypeGuard::Stats& gs = guard_->stats();
    const CacheStats& cs = cache_->stats();
    const Workload::Totals& wt = workload_->totals();

    s.flushes_pt_total = gs.pt_flush_events;
    s.flushes_other_total = io.flushes_total - gs.pt_flush_events;
    s.flushed_entries_total = io.flushed_entries;
    s.iotlb_hits_total = io.hits;
    s.iotlb_misses_total = io.misses;
    s.dma_faults_blocked_total = io.dma_blocked;
    s.processes_created_total = wt.created;
    s.processes_exited_total = wt.exited;
    s.fallbacks_total = cs.fallbacks;
    s.pops_total = cs.pops;
    s.pushes_total = cs.pushes;
    s.step_cost_total = step_cost_total_;
    s.step_cost_by_kind = step_cost_by_kind_;

    if (warm_.minutes > 0) {
        s.avg_miss_rate = warm_.miss_rate_sum / warm_.minutes;
        s.avg_flushes_pt = double(warm_.flushes_pt) / warm_.minutes;
    }
    for (size_t lv = 0; lv < 3; ++lv) {
        s.avg_alloc_cost[lv] = warm_.alloc_count[lv]
                                   ? double(warm_.alloc_sum[lv]) / warm_.alloc_count[lv]
                                   : 0.0;
        s.avg_dealloc_cost[lv] =
            warm_.dealloc_count[lv] ? double(warm_.dealloc_sum[lv]) / warm_.dealloc_count[lv]
                                    : 0.0;
    }
    s.fallback_ratio = double(cs.fallbacks) / double(std::max<uint64_t>(1, cs.pops));
    s.dma_writes_to_protected = io.writes_to_protected;
    s.stale_hits = io.stale_hits;
    return s;
}

void Simulator::audit_all() const {
    frames_.audit_words();
    alloc_->audit();
    cache_->audit();
    workload_->audit_live();
    audit_refcounts();
    audit_conservation();
}

void Simulator::audit_refcounts() const {
    std::vector<uint32_t> expected(frames_.pool_size(), 0);
    for (uint32_t i = 0; i < frames_.pool_size(); ++i) {
        FrameId f(i);
        TypeWordFields w = frames_.fields(f);
        if (!w.validated) continue;
        const std::vector<PtEntry>* ents = frames_.entries(f);
        if (!ents) continue;
        auto level = level_of_code(w.code);
        for (const PtEntry& e : *ents) {
            if (!e.present) continue;
            if (level == PageLevel::L3 && !e.writable) continue;
            expected[e.target.index] += 1;
        }
    }
    for (uint32_t i = 0; i < frames_.pool_size(); ++i) {
        uint32_t have = frames_.fields(FrameId(i)).refcount;
        if (have != expected[i]) {
            throw SimAbort("refcount sweep mismatch on frame " + std::to_string(i) +
                           ": have " + std::to_string(have) + " expected " +
                           std::to_string(expected[i]));
        }
    }
}

void Simulator::audit_conservation() const {
    std::vector<uint8_t> owners(frames_.pool_size(), 0);
    for (FrameId f : workload_->held_frames()) owners[f.index] += 1;
    for (uint32_t i = 0; i < frames_.pool_size(); ++i) {
        FrameId f(i);
        uint8_t n = owners[i];
        if (cache_->contains(f)) ++n;
        if (alloc_->is_free_frame(f)) ++n;
        if (n != 1) {
            throw SimAbort("conservation sweep: frame " + std::to_string(i) + " has " +
                           std::to_string(n) + " owners");
        }
    }
}

}  // namespace ptmsim
