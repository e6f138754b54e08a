#include "ptmsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ptmsim {

Workload::Workload(FrameTable& frames, BuddyAllocator& alloc, TypeGuard& guard,
                   PtCache& cache, IommuModel& iommu, StepMeter& meter,
                   const CostModel& costs, WorkloadConfig cfg, uint64_t seed,
                   std::vector<ScriptedControl> controls, std::vector<FrameId> data_pool)
    : frames_(frames), alloc_(alloc), guard_(guard), cache_(cache), iommu_(iommu),
      meter_(meter), costs_(costs), cfg_(cfg), rng_(seed),
      controls_(std::move(controls)), data_pool_(std::move(data_pool)) {
    if (cfg_.shape.l2_pages < 1 || cfg_.shape.l3_pages < cfg_.shape.l2_pages) {
        throw SimAbort("process shape must satisfy l3 >= l2 >= 1");
    }
    if (cfg_.data_entries_per_l3 > 0 && data_pool_.empty()) {
        throw SimAbort("data pool empty but bottom-level entries requested");
    }
    if (cfg_.dma.dist == DmaProfile::AddrDist::Zipf) {
        zipf_cdf_.resize(cfg_.dma.working_set);
        double cum = 0.0;
        for (uint32_t k = 0; k < cfg_.dma.working_set; ++k) {
            cum += 1.0 / std::pow(double(k + 1), cfg_.dma.zipf_s);
            zipf_cdf_[k] = cum;
        }
        for (double& v : zipf_cdf_) v /= cum;
    }
}

uint64_t Workload::draw_lifetime_ms() {
    if (cfg_.lifetime.kind == LifetimeModel::Kind::Fixed) return cfg_.lifetime.fixed_ms;
    std::exponential_distribution<double> dist(1.0 / cfg_.lifetime.mean_ms);
    double v = dist(rng_);
    uint64_t ms = static_cast<uint64_t>(v);
    return std::min<uint64_t>(std::max<uint64_t>(ms, 1), cfg_.lifetime.cap_ms);
}

uint32_t Workload::draw_io_page() {
    if (cfg_.dma.dist == DmaProfile::AddrDist::Uniform) {
        std::uniform_int_distribution<uint32_t> dist(0, cfg_.dma.working_set - 1);
        return dist(rng_);
    }
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double u = u01(rng_);
    auto it = std::lower_bound(zipf_cdf_.begin(), zipf_cdf_.end(), u);
    return static_cast<uint32_t>(std::distance(zipf_cdf_.begin(), it));
}

std::vector<Event> Workload::minute_events(uint32_t minute) {
    std::vector<Event> evs;
    uint64_t start = uint64_t(minute) * kTicksPerMinute;
    uint64_t end = start + kTicksPerMinute;

    for (const ScriptedControl& c : controls_) {
        if (c.minute != minute) continue;
        Event ev;
        ev.tick = start;
        ev.priority = 0;
        ev.seq = seq_++;
        ev.kind = EventKind::Control;
        ev.control = c;
        evs.push_back(ev);
    }

    std::uniform_int_distribution<uint64_t> tick_dist(0, kTicksPerMinute - 1);
    for (uint32_t k = 0; k < cfg_.procs_per_minute; ++k) {
        Event ev;
        ev.tick = cfg_.schedule == WorkloadConfig::Schedule::Grid
                      ? start + (uint64_t(k) * kTicksPerMinute) / cfg_.procs_per_minute
                      : start + tick_dist(rng_);
        ev.priority = 2;
        ev.seq = seq_++;
        ev.kind = EventKind::Create;
        ev.pid = next_pid_++;
        ev.lifetime_ms = draw_lifetime_ms();
        evs.push_back(ev);
        pending_exits_.push(PendingExit{ev.tick + ev.lifetime_ms, ev.seq, ev.pid});
    }

    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (uint32_t k = 0; k < cfg_.dma.per_minute; ++k) {
        Event ev;
        ev.tick = start + tick_dist(rng_);
        ev.priority = 3;
        ev.seq = seq_++;
        ev.kind = EventKind::Dma;
        ev.io_page = draw_io_page();
        ev.is_write = u01(rng_) < cfg_.dma.write_fraction;
        evs.push_back(ev);
    }

    while (!pending_exits_.empty() && pending_exits_.top().tick < end) {
        PendingExit pe = pending_exits_.top();
        pending_exits_.pop();
        Event ev;
        ev.tick = pe.tick;
        ev.priority = 1;
        ev.seq = seq_++;
        ev.kind = EventKind::Exit;
        ev.pid = pe.pid;
        evs.push_back(ev);
    }

    std::sort(evs.begin(), evs.end(), [](const Event& a, const Event& b) {
        return std::tie(a.tick, a.priority, a.seq) < std::tie(b.tick, b.priority, b.seq);
    });
    return evs;
}

void Workload::apply(const Event& ev) {
    switch (ev.kind) {
    case EventKind::Control: {
        const ScriptedControl& c = ev.control;
        switch (c.action) {
        case ControlAction::EnableCache: {
            Status st = cache_.enable();
            if (!st.ok()) throw SimAbort(std::string("scripted enable failed: ") +
                                         to_string(st.error()));
            break;
        }
        case ControlAction::DisableCache: {
            Status st = cache_.disable();
            if (!st.ok()) throw SimAbort(std::string("scripted disable failed: ") +
                                         to_string(st.error()));
            break;
        }
        case ControlAction::ShrinkCount: {
            auto r = cache_.shrink(ShrinkSpec::by_count(c.count.value_or(0)));
            if (!r.ok()) throw SimAbort("scripted shrink failed");
            break;
        }
        case ControlAction::ShrinkPercent: {
            auto r = cache_.shrink(ShrinkSpec::by_percent(c.ratio.value_or(0.0)));
            if (!r.ok()) throw SimAbort("scripted shrink failed");
            break;
        }
        case ControlAction::SetThreshold:
            cache_.set_threshold(c.count, c.ratio);
            cache_.auto_shrink_check();
            break;
        }
        break;
    }
    case EventKind::Create:
        create_process(ev.pid);
        break;
    case EventKind::Exit:
        exit_process(ev.pid);
        break;
    case EventKind::Dma: {
        auto r = iommu_.translate(0, ev.io_page, ev.is_write);
        if (!r.ok() && r.error() == Err::Unmapped) {
            throw SimAbort("DMA translate hit an unmapped io page " +
                           std::to_string(ev.io_page));
        }
        break;
    }
    }
}

FrameId Workload::acquire_pt_frame(PageLevel level, bool* was_fallback,
                                   uint64_t* fallback_alloc_cost) {
    *was_fallback = false;
    if (cache_.enabled()) {
        auto popped = cache_.pop(level);
        if (popped.ok()) return popped.value();
        if (popped.error() != Err::Empty) {
            throw SimAbort("cache pop failed unexpectedly");
        }
        // Fallback: traditional allocation plus the writable ->
        // semi-writable conversion, keeping the fine-grained edge
        // discipline even on the slow path.
        uint64_t alloc_cost = 0;
        auto got = alloc_.alloc_page(&alloc_cost);
        if (!got.ok()) throw SimAbort("out of memory allocating page-table page");
        TransitionOutcome tr = guard_.request_transition(got.value(), TypeState::Semi);
        if (!tr.accepted) throw SimAbort("fallback conversion rejected");
        *was_fallback = true;
        *fallback_alloc_cost = alloc_cost;
        totals_.fallback_allocs += 1;
        return got.value();
    }
    auto got = alloc_.alloc_page();
    if (!got.ok()) throw SimAbort("out of memory allocating page-table page");
    return got.value();
}

void Workload::finish_fallback_audit(FrameId frame, uint64_t actual_cost,
                                     uint64_t alloc_cost, uint32_t present_entries) {
    // What the coarse path would have charged for the same request: the
    // same allocator work plus one writable -> page-table transition with
    // its DMA validation.
    uint32_t mappings = iommu_.mappings_of_frame(frame);
    uint64_t flush_invocations =
        guard_.scheme() == InvalidationScheme::PageSelective ? mappings
                                                             : (mappings > 0 ? 1 : 0);
    uint64_t baseline = alloc_cost + costs_.hypercall + costs_.bookkeeping +
                        costs_.validation_const + uint64_t(present_entries) * costs_.per_entry +
                        uint64_t(mappings) * costs_.iommu_update +
                        flush_invocations * costs_.flush;
    int64_t excess = int64_t(actual_cost) - int64_t(baseline);
    if (!totals_.any_fallback || excess > totals_.max_fallback_excess) {
        totals_.max_fallback_excess = excess;
    }
    totals_.any_fallback = true;
}

uint64_t Workload::create_process(uint64_t pid) {
    const uint32_t c2 = cfg_.shape.l2_pages;
    const uint32_t c3 = cfg_.shape.l3_pages;
    if (c2 > frames_.entries_per_level(PageLevel::L1)) {
        throw SimAbort("shape l2 count exceeds top-level entry slots");
    }
    if ((c3 + c2 - 1) / c2 > frames_.entries_per_level(PageLevel::L2) ||
        cfg_.data_entries_per_l3 > frames_.entries_per_level(PageLevel::L3)) {
        throw SimAbort("shape exceeds entry slots");
    }

    LiveProcess proc;
    proc.l3.reserve(c3);
    proc.l2.reserve(c2);

    auto build_frame = [&](PageLevel level, auto&& fill_entries) -> FrameId {
        uint64_t t0 = meter_.total();
        bool fallback = false;
        uint64_t alloc_cost = 0;
        FrameId f = acquire_pt_frame(level, &fallback, &alloc_cost);
        if (!frames_.stage_entries(f, level).ok()) {
            throw SimAbort("entry staging failed");
        }
        uint32_t present = fill_entries(f);
        TransitionOutcome tr = guard_.request_transition(f, page_table_state(level));
        if (!tr.accepted) {
            throw SimAbort(std::string("page-table validation rejected: ") +
                           to_string(tr.reject_reason.value_or(Err::BadState)));
        }
        uint64_t sample = meter_.total() - t0;
        size_t lv = level_index(level);
        minute_.alloc_cost_sum[lv] += sample;
        minute_.alloc_count[lv] += 1;
        if (fallback) finish_fallback_audit(f, sample, alloc_cost, present);
        return f;
    };

    // Bottom level first: a directory entry may only reference an already
    // validated page of the level below.
    for (uint32_t i = 0; i < c3; ++i) {
        proc.l3.push_back(build_frame(PageLevel::L3, [&](FrameId f) {
            uint32_t n = cfg_.data_entries_per_l3;
            for (uint32_t slot = 0; slot < n; ++slot) {
                FrameId data = data_pool_[data_cursor_++ % data_pool_.size()];
                (void)frames_.set_entry(f, slot, PtEntry{true, data, true});
            }
            return n;
        }));
    }
    for (uint32_t i = 0; i < c2; ++i) {
        uint32_t lo = i * c3 / c2;
        uint32_t hi = (i + 1) * c3 / c2;
        proc.l2.push_back(build_frame(PageLevel::L2, [&](FrameId f) {
            for (uint32_t j = lo; j < hi; ++j) {
                (void)frames_.set_entry(f, j - lo, PtEntry{true, proc.l3[j], false});
            }
            return hi - lo;
        }));
    }
    proc.l1 = build_frame(PageLevel::L1, [&](FrameId f) {
        for (uint32_t i = 0; i < c2; ++i) {
            (void)frames_.set_entry(f, i, PtEntry{true, proc.l2[i], false});
        }
        return c2;
    });

    live_.emplace(pid, std::move(proc));
    minute_.created += 1;
    totals_.created += 1;
    return pid;
}

void Workload::exit_process(uint64_t pid) {
    auto it = live_.find(pid);
    if (it == live_.end()) {
        throw SimAbort("exit of unknown or already exited pid " + std::to_string(pid));
    }
    LiveProcess proc = std::move(it->second);
    live_.erase(it);

    auto retire_frame = [&](PageLevel level, FrameId f) {
        uint64_t t0 = meter_.total();
        if (cache_.enabled()) {
            TransitionOutcome tr = guard_.request_transition(f, TypeState::Semi);
            if (!tr.accepted) throw SimAbort("page-table devalidation rejected");
            Status st = cache_.push(level, f);
            if (!st.ok()) throw SimAbort("cache push rejected on exit path");
        } else {
            TransitionOutcome tr = guard_.request_transition(f, TypeState::Writable);
            if (!tr.accepted) throw SimAbort("page-table devalidation rejected");
            auto freed = alloc_.free_page(f);
            if (!freed.ok()) throw SimAbort("free of page-table page failed");
        }
        size_t lv = level_index(level);
        minute_.dealloc_cost_sum[lv] += meter_.total() - t0;
        minute_.dealloc_count[lv] += 1;
    };

    // Top-down: dropping the directory releases the references that pin
    // the level below.
    retire_frame(PageLevel::L1, proc.l1);
    for (FrameId f : proc.l2) retire_frame(PageLevel::L2, f);
    for (FrameId f : proc.l3) retire_frame(PageLevel::L3, f);

    minute_.exited += 1;
    totals_.exited += 1;
}

Workload::MinuteCounters Workload::take_minute_counters() {
    MinuteCounters out = minute_;
    minute_ = MinuteCounters{};
    return out;
}

void Workload::audit_live() const {
    for (const auto& [pid, proc] : live_) {
        auto check = [&](FrameId f, PageTypeCode code) {
            TypeWordFields w = frames_.fields(f);
            if (w.code != code || !w.validated) {
                throw SimAbort("live-process frame " + std::to_string(f.index) +
                               " not in validated page-table state");
            }
        };
        check(proc.l1, PageTypeCode::L1PageTable);
        for (FrameId f : proc.l2) check(f, PageTypeCode::L2PageTable);
        for (FrameId f : proc.l3) check(f, PageTypeCode::L3PageTable);
    }
    for (FrameId f : data_pool_) {
        TypeWordFields w = frames_.fields(f);
        if (w.code != PageTypeCode::Writable || w.semi) {
            throw SimAbort("data-pool frame left the writable state");
        }
    }
}

std::vector<FrameId> Workload::held_frames() const {
    std::vector<FrameId> out;
    for (const auto& [pid, proc] : live_) {
        out.push_back(proc.l1);
        out.insert(out.end(), proc.l2.begin(), proc.l2.end());
        out.insert(out.end(), proc.l3.begin(), proc.l3.end());
    }
    out.insert(out.end(), data_pool_.begin(), data_pool_.end());
    return out;
}

}  // namespace ptmsim
