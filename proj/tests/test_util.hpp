#pragma once

#include "doctest.h"
#include "ptmsim/buddy.hpp"
#include "ptmsim/iommu.hpp"
#include "ptmsim/pt_cache.hpp"
#include "ptmsim/type_guard.hpp"

namespace testutil {

/// Assembles the full module stack over one frame pool.
struct Rig {
    ptmsim::CostModel costs;
    ptmsim::FrameTable frames;
    ptmsim::StepMeter meter;
    ptmsim::IommuModel iommu;
    ptmsim::TypeGuard guard;
    ptmsim::BuddyAllocator alloc;
    ptmsim::PtCache cache;

    explicit Rig(uint32_t pool,
                 ptmsim::InvalidationScheme scheme = ptmsim::InvalidationScheme::PageSelective,
                 bool identity_map = true, uint32_t max_order = 10,
                 ptmsim::IommuConfig icfg = {}, ptmsim::EntriesPerLevel epl = {},
                 ptmsim::CacheConfig ccfg = {})
        : frames(pool, epl),
          iommu(frames, icfg),
          guard(frames, iommu, meter, costs, scheme),
          alloc(frames, meter, costs, max_order),
          cache(frames, alloc, guard, meter, costs, ccfg) {
        if (identity_map) {
            for (uint32_t i = 0; i < pool; ++i) {
                (void)iommu.map_io(0, i, ptmsim::FrameId(i));
            }
        }
    }

    ptmsim::FrameId fresh_writable() {
        auto got = alloc.alloc_page();
        REQUIRE(got.ok());
        return got.value();
    }

    /// Allocates a frame and walks it to semi-writable (fine mode).
    ptmsim::FrameId fresh_semi() {
        guard.set_mode(ptmsim::ValidationMode::FineGrained);
        ptmsim::FrameId f = fresh_writable();
        auto tr = guard.request_transition(f, ptmsim::TypeState::Semi);
        REQUIRE(tr.accepted);
        return f;
    }

    /// Allocates a frame and promotes it to a validated (blank) page-table
    /// page of the given level using the current mode's legal path.
    ptmsim::FrameId fresh_pt(ptmsim::PageLevel level) {
        using namespace ptmsim;
        FrameId f;
        if (guard.mode() == ValidationMode::FineGrained) {
            f = fresh_semi();
        } else {
            f = fresh_writable();
        }
        auto tr = guard.request_transition(f, page_table_state(level));
        REQUIRE(tr.accepted);
        return f;
    }
};

}  // namespace testutil
