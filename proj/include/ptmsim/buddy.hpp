#pragma once

#include <set>
#include <vector>

#include "ptmsim/frame_table.hpp"
#include "ptmsim/step_meter.hpp"
#include "ptmsim/types.hpp"

namespace ptmsim {

/// Buddy allocator over the physical frame pool with a constant-cost slab
/// front layer. Splits on allocate, merges eagerly on free. Cost units:
/// one per list operation, split, and merge, plus the slab front constant
/// per allocation.
///
/// Allocation flips the frame Untracked -> Writable; free requires the
/// frame back in Writable state with refcount zero and flips it to
/// Untracked.
class BuddyAllocator {
public:
    BuddyAllocator(FrameTable& frames, StepMeter& meter, const CostModel& costs,
                   uint32_t max_order);

    /// Returns one order-0 frame. `cost_out`, when given, receives the
    /// units charged for this call.
    Result<FrameId> alloc_page(uint64_t* cost_out = nullptr);

    /// Returns the cost charged.
    Result<uint64_t> free_page(FrameId f);

    uint32_t free_frames() const { return free_frames_; }
    uint32_t max_order() const { return max_order_; }
    bool is_allocated(FrameId f) const { return allocated_[f.index]; }

    /// True iff the frame lies inside some free block (audit helper).
    bool is_free_frame(FrameId f) const;

    const std::set<uint32_t>& free_list(uint32_t order) const {
        return free_lists_[order];
    }

    /// Checks block disjointness, order consistency, eager coalescing, and
    /// the free-frame count. Throws SimAbort on violation.
    void audit() const;

private:
    uint32_t order_frames(uint32_t order) const { return 1u << order; }

    FrameTable& frames_;
    StepMeter& meter_;
    const CostModel& costs_;
    uint32_t max_order_;
    std::vector<std::set<uint32_t>> free_lists_;  // per order, block bases
    std::vector<bool> allocated_;                 // order-0 frames handed out
    uint32_t free_frames_ = 0;
};

}  // namespace ptmsim
