#include "ptmsim/buddy.hpp"

#include <string>

namespace ptmsim {

const char* to_string(CostKind k) {
    switch (k) {
    case CostKind::ListOps: return "list_ops";
    case CostKind::Splits: return "splits";
    case CostKind::Merges: return "merges";
    case CostKind::SlabFront: return "slab_front";
    case CostKind::Validation: return "validation";
    case CostKind::Hypercall: return "hypercall";
    case CostKind::IommuUpdate: return "iommu_update";
    case CostKind::FlushOp: return "flush_op";
    }
    return "unknown";
}

BuddyAllocator::BuddyAllocator(FrameTable& frames, StepMeter& meter,
                               const CostModel& costs, uint32_t max_order)
    : frames_(frames), meter_(meter), costs_(costs), max_order_(max_order) {
    free_lists_.resize(max_order_ + 1);
    allocated_.assign(frames_.pool_size(), false);

    // Carve the pool into maximal aligned blocks.
    uint32_t base = 0;
    uint32_t remaining = frames_.pool_size();
    while (remaining > 0) {
        uint32_t order = max_order_;
        while (order > 0 &&
               (order_frames(order) > remaining || base % order_frames(order) != 0)) {
            --order;
        }
        free_lists_[order].insert(base);
        base += order_frames(order);
        remaining -= order_frames(order);
    }
    free_frames_ = frames_.pool_size();
}

Result<FrameId> BuddyAllocator::alloc_page(uint64_t* cost_out) {
    uint32_t order = 0;
    while (order <= max_order_ && free_lists_[order].empty()) ++order;
    if (order > max_order_) return Err::OutOfMemory;

    uint64_t cost = costs_.slab_front;
    meter_.charge(CostKind::SlabFront, costs_.slab_front);

    uint32_t base = *free_lists_[order].begin();
    free_lists_[order].erase(free_lists_[order].begin());

    while (order > 0) {
        --order;
        free_lists_[order].insert(base + order_frames(order));
        meter_.charge(CostKind::Splits, costs_.split);
        cost += costs_.split;
    }
    meter_.charge(CostKind::ListOps, costs_.list_op);
    cost += costs_.list_op;

    allocated_[base] = true;
    --free_frames_;
    frames_.write_word(FrameId(base), PageTypeCode::Writable, false, false, 0);

    if (cost_out) *cost_out = cost;
    return FrameId(base);
}

Result<uint64_t> BuddyAllocator::free_page(FrameId f) {
    if (!frames_.exists(f) || !allocated_[f.index]) return Err::NotAllocated;
    TypeWordFields w = frames_.fields(f);
    if (w.code != PageTypeCode::Writable || w.semi || w.refcount != 0) {
        return Err::BadState;
    }

    frames_.clear_entries(f);
    frames_.write_word(f, PageTypeCode::Untracked, false, false, 0);
    allocated_[f.index] = false;
    ++free_frames_;

    uint64_t cost = 0;
    uint32_t base = f.index;
    uint32_t order = 0;
    while (order < max_order_) {
        uint32_t buddy = base ^ order_frames(order);
        if (buddy + order_frames(order) > frames_.pool_size()) break;
        auto it = free_lists_[order].find(buddy);
        if (it == free_lists_[order].end()) break;
        free_lists_[order].erase(it);
        base = std::min(base, buddy);
        ++order;
        meter_.charge(CostKind::Merges, costs_.merge);
        cost += costs_.merge;
    }
    free_lists_[order].insert(base);
    meter_.charge(CostKind::ListOps, costs_.list_op);
    cost += costs_.list_op;
    return cost;
}

bool BuddyAllocator::is_free_frame(FrameId f) const {
    for (uint32_t order = 0; order <= max_order_; ++order) {
        uint32_t block = order_frames(order);
        uint32_t base = (f.index / block) * block;
        if (free_lists_[order].count(base)) return true;
    }
    return false;
}

void BuddyAllocator::audit() const {
    std::vector<bool> covered(frames_.pool_size(), false);
    uint32_t free_count = 0;
    for (uint32_t order = 0; order <= max_order_; ++order) {
        uint32_t block = order_frames(order);
        for (uint32_t base : free_lists_[order]) {
            if (base % block != 0) throw SimAbort("buddy audit: misaligned block");
            if (base + block > frames_.pool_size())
                throw SimAbort("buddy audit: block out of range");
            for (uint32_t i = base; i < base + block; ++i) {
                if (covered[i]) throw SimAbort("buddy audit: overlapping free blocks");
                if (allocated_[i]) throw SimAbort("buddy audit: free block covers allocated frame");
                covered[i] = true;
            }
            free_count += block;
            // Eager coalescing: a block's buddy must not be free at the
            // same order.
            if (order < max_order_) {
                uint32_t buddy = base ^ block;
                if (buddy + block <= frames_.pool_size() &&
                    free_lists_[order].count(buddy)) {
                    throw SimAbort("buddy audit: unmerged buddy pair at order " +
                                   std::to_string(order));
                }
            }
        }
    }
    if (free_count != free_frames_) throw SimAbort("buddy audit: free-frame count drift");
    for (uint32_t i = 0; i < frames_.pool_size(); ++i) {
        if (covered[i] == allocated_[i]) {
            throw SimAbort("buddy audit: frame " + std::to_string(i) +
                           " neither free nor allocated");
        }
    }
}

}  // namespace ptmsim
