#include "ptmsim/pt_cache.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ptmsim {

PtCache::PtCache(FrameTable& frames, BuddyAllocator& alloc, TypeGuard& guard,
                 StepMeter& meter, const CostModel& costs, CacheConfig cfg)
    : frames_(frames), alloc_(alloc), guard_(guard), meter_(meter), costs_(costs),
      cfg_(cfg) {}

Status PtCache::init(std::array<uint32_t, 3> counts) {
    if (enabled_ && stats_.total_cached() > 0) return Err::BadState;

    uint32_t total = counts[0] + counts[1] + counts[2];
    std::vector<FrameId> bulk;
    bulk.reserve(total);
    for (uint32_t i = 0; i < total; ++i) {
        auto got = alloc_.alloc_page();
        if (!got.ok()) {
            for (FrameId f : bulk) (void)alloc_.free_page(f);
            return got.error();
        }
        bulk.push_back(got.value());
    }

    if (total > 0) {
        TransitionOutcome batch = guard_.batch_transition(bulk, TypeState::Semi);
        if (!batch.accepted) {
            for (FrameId f : bulk) (void)alloc_.free_page(f);
            return batch.reject_reason.value_or(Err::BadState);
        }
    }

    size_t next = 0;
    for (size_t lv = 0; lv < 3; ++lv) {
        for (uint32_t i = 0; i < counts[lv]; ++i) {
            FrameId f = bulk[next++];
            lists_[lv].push_front(f);
            members_.insert(f.index);
            stats_.cached[lv] += 1;
        }
    }

    enabled_ = true;
    guard_.set_mode(ValidationMode::FineGrained);
    return Status::ok_status();
}

Result<FrameId> PtCache::pop(PageLevel level) {
    if (!enabled_) return Err::Disabled;
    size_t lv = level_index(level);
    if (lists_[lv].empty()) {
        stats_.fallbacks += 1;
        meter_.charge(CostKind::ListOps, costs_.cache_probe);
        return Err::Empty;
    }
    FrameId f = lists_[lv].front();
    lists_[lv].pop_front();
    members_.erase(f.index);
    stats_.cached[lv] -= 1;
    stats_.pops += 1;
    meter_.charge(CostKind::ListOps, costs_.cache_pop);
    return f;
}

Status PtCache::push(PageLevel level, FrameId frame) {
    if (!enabled_) return Err::Disabled;
    TypeWordFields w = frames_.fields(frame);
    if (w.code != PageTypeCode::Writable || !w.semi || w.refcount != 0) {
        return Err::BadState;
    }
    if (members_.count(frame.index)) return Err::DuplicateFrame;

    size_t lv = level_index(level);
    lists_[lv].push_front(frame);
    members_.insert(frame.index);
    stats_.cached[lv] += 1;
    stats_.pushes += 1;
    meter_.charge(CostKind::ListOps, costs_.cache_push);

    if (cfg_.threshold_count || cfg_.threshold_proportion) auto_shrink_check();
    return Status::ok_status();
}

uint32_t PtCache::release_frames(uint32_t k) {
    if (k == 0) return 0;
    std::vector<FrameId> victims;
    victims.reserve(k);
    for (uint32_t i = 0; i < k; ++i) {
        // Largest list first; ties resolved toward the top level.
        size_t lv = 0;
        for (size_t j = 1; j < 3; ++j) {
            if (stats_.cached[j] > stats_.cached[lv]) lv = j;
        }
        if (stats_.cached[lv] == 0) break;
        FrameId f = lists_[lv].front();
        lists_[lv].pop_front();
        members_.erase(f.index);
        stats_.cached[lv] -= 1;
        victims.push_back(f);
    }

    TransitionOutcome batch = guard_.batch_transition(victims, TypeState::Writable);
    if (!batch.accepted) throw SimAbort("cache release: batch conversion rejected");
    for (FrameId f : victims) {
        auto freed = alloc_.free_page(f);
        if (!freed.ok()) throw SimAbort("cache release: free_page failed");
    }
    return static_cast<uint32_t>(victims.size());
}

Result<uint32_t> PtCache::shrink(ShrinkSpec spec) {
    if (!enabled_) return Err::Disabled;
    uint32_t total = stats_.total_cached();
    uint32_t k = 0;
    if (spec.kind == ShrinkSpec::Kind::ByCount) {
        k = std::min(spec.count, total);
    } else {
        double p = std::clamp(spec.percent, 0.0, 1.0);
        k = static_cast<uint32_t>(std::floor(p * total));
    }
    return release_frames(k);
}

void PtCache::set_threshold(std::optional<uint32_t> count, std::optional<double> proportion) {
    cfg_.threshold_count = count;
    cfg_.threshold_proportion = proportion;
}

uint32_t PtCache::auto_shrink_check() {
    if (!enabled_) return 0;
    uint32_t total = stats_.total_cached();
    uint32_t target = total;
    if (cfg_.threshold_count && total > *cfg_.threshold_count) {
        target = std::min(target, *cfg_.threshold_count);
    }
    if (cfg_.threshold_proportion) {
        double p = *cfg_.threshold_proportion;
        uint32_t live_pt = frames_.live_pt_pages();
        // live_pt of zero leaves no budget for spare pages at all.
        bool exceeded = live_pt == 0 ? total > 0
                                     : static_cast<double>(total) > p * live_pt;
        if (exceeded) {
            target = std::min(target,
                              static_cast<uint32_t>(std::floor(p * live_pt)));
        }
    }
    if (target >= total) return 0;
    return release_frames(total - target);
}

Status PtCache::enable() {
    if (enabled_) return Err::AlreadyEnabled;
    return init(cfg_.initial_counts);
}

Status PtCache::disable() {
    if (!enabled_) return Err::AlreadyDisabled;
    release_frames(stats_.total_cached());
    enabled_ = false;
    guard_.set_mode(ValidationMode::Coarse);
    return Status::ok_status();
}

void PtCache::audit() const {
    uint32_t seen = 0;
    for (size_t lv = 0; lv < 3; ++lv) {
        uint32_t n = 0;
        for (FrameId f : lists_[lv]) {
            TypeWordFields w = frames_.fields(f);
            if (w.code != PageTypeCode::Writable || !w.semi || w.refcount != 0) {
                throw SimAbort("cache audit: listed frame " + std::to_string(f.index) +
                               " not semi-writable/refcount-0");
            }
            if (alloc_.is_free_frame(f)) {
                throw SimAbort("cache audit: listed frame " + std::to_string(f.index) +
                               " sits in a free list");
            }
            if (!members_.count(f.index)) {
                throw SimAbort("cache audit: membership set drift");
            }
            ++n;
        }
        if (n != stats_.cached[lv]) throw SimAbort("cache audit: level count drift");
        seen += n;
    }
    if (seen != members_.size()) throw SimAbort("cache audit: duplicate listed frame");
}

}  // namespace ptmsim
