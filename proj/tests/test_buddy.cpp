#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "ptmsim/buddy.hpp"

using namespace ptmsim;

namespace {

struct AllocRig {
    CostModel costs;
    FrameTable frames;
    StepMeter meter;
    BuddyAllocator alloc;

    AllocRig(uint32_t pool, uint32_t max_order)
        : frames(pool, EntriesPerLevel{}), alloc(frames, meter, costs, max_order) {}
};

}  // namespace

TEST_CASE("splitting one maximal block down to a single frame") {
    AllocRig rig(8, 3);
    uint64_t cost = 0;
    auto got = rig.alloc.alloc_page(&cost);
    REQUIRE(got.ok());
    CHECK(got.value() == FrameId(0));
    CHECK(cost == 9);  // slab front 5 + 1 list op + 3 splits
    CHECK(rig.meter.category(CostKind::Splits) == 3);
    CHECK(rig.frames.fields(got.value()).code == PageTypeCode::Writable);
    CHECK(rig.alloc.free_frames() == 7);
    rig.alloc.audit();
}

TEST_CASE("exact fit takes the head of the order-0 list") {
    AllocRig rig(8, 3);
    REQUIRE(rig.alloc.alloc_page().ok());  // leaves an order-0 buddy behind
    uint64_t cost = 0;
    auto got = rig.alloc.alloc_page(&cost);
    REQUIRE(got.ok());
    CHECK(got.value() == FrameId(1));
    CHECK(cost == 6);  // slab front 5 + 1 list op, no splits
}

TEST_CASE("exhausted pool reports out of memory") {
    AllocRig rig(8, 3);
    for (int i = 0; i < 8; ++i) REQUIRE(rig.alloc.alloc_page().ok());
    auto got = rig.alloc.alloc_page();
    REQUIRE(!got.ok());
    CHECK(got.error() == Err::OutOfMemory);
}

TEST_CASE("freeing the only allocated frame merges all the way up") {
    AllocRig rig(8, 3);
    auto got = rig.alloc.alloc_page();
    REQUIRE(got.ok());
    auto cost = rig.alloc.free_page(got.value());
    REQUIRE(cost.ok());
    CHECK(cost.value() == 4);  // 1 list op + 3 merges
    CHECK(rig.meter.category(CostKind::Merges) == 3);
    CHECK(rig.alloc.free_frames() == 8);
    CHECK(rig.alloc.free_list(3).count(0) == 1);
    rig.alloc.audit();
}

TEST_CASE("an allocated buddy blocks merging") {
    AllocRig rig(8, 3);
    auto a = rig.alloc.alloc_page();
    auto b = rig.alloc.alloc_page();
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    auto cost = rig.alloc.free_page(a.value());
    REQUIRE(cost.ok());
    CHECK(cost.value() == 1);  // list op only, buddy still out
    CHECK(rig.meter.category(CostKind::Merges) == 0);
}

TEST_CASE("double free and foreign frames are rejected") {
    AllocRig rig(8, 3);
    auto got = rig.alloc.alloc_page();
    REQUIRE(got.ok());
    REQUIRE(rig.alloc.free_page(got.value()).ok());
    CHECK(rig.alloc.free_page(got.value()).error() == Err::NotAllocated);
    CHECK(rig.alloc.free_page(FrameId(5)).error() == Err::NotAllocated);
}

TEST_CASE("frames outside the plain writable state cannot be freed") {
    AllocRig rig(8, 3);
    auto got = rig.alloc.alloc_page();
    REQUIRE(got.ok());

    rig.frames.write_word(got.value(), PageTypeCode::Writable, false, true, 0);
    CHECK(rig.alloc.free_page(got.value()).error() == Err::BadState);

    rig.frames.write_word(got.value(), PageTypeCode::Writable, false, false, 2);
    CHECK(rig.alloc.free_page(got.value()).error() == Err::BadState);

    rig.frames.write_word(got.value(), PageTypeCode::Writable, false, false, 0);
    CHECK(rig.alloc.free_page(got.value()).ok());
}

TEST_CASE("random alloc/free traces match the bitmap oracle") {
    constexpr uint32_t kPool = 512;
    AllocRig rig(kPool, 9);
    oracles::BitmapAlloc oracle(kPool);
    std::mt19937_64 rng(42);
    std::vector<FrameId> held;

    for (int op = 0; op < 10000; ++op) {
        bool do_alloc = held.empty() || (rng() % 2 == 0);
        if (do_alloc) {
            auto got = rig.alloc.alloc_page();
            if (got.ok()) {
                REQUIRE(oracle.on_alloc(got.value().index));
                held.push_back(got.value());
            } else {
                CHECK(oracle.free_count() == 0);
            }
        } else {
            size_t pick = rng() % held.size();
            FrameId f = held[pick];
            held.erase(held.begin() + pick);
            REQUIRE(rig.alloc.free_page(f).ok());
            REQUIRE(oracle.on_free(f.index));
        }
        CHECK(rig.alloc.free_frames() == oracle.free_count());
        if (op % 500 == 0) {
            rig.alloc.audit();
            // Free sets must agree exactly, not just in size.
            std::set<uint32_t> have;
            for (uint32_t i = 0; i < kPool; ++i) {
                if (rig.alloc.is_free_frame(FrameId(i))) have.insert(i);
            }
            CHECK(have == oracle.free_set());
        }
    }
    rig.alloc.audit();
}

TEST_CASE("alloc cost stays within the split bound") {
    constexpr uint32_t kMaxOrder = 6;
    AllocRig rig(64, kMaxOrder);
    std::mt19937_64 rng(7);
    std::vector<FrameId> held;

    for (int op = 0; op < 3000; ++op) {
        if (held.empty() || rng() % 3 != 0) {
            uint64_t cost = 0;
            auto got = rig.alloc.alloc_page(&cost);
            if (!got.ok()) continue;
            CHECK(cost >= rig.costs.slab_front + 1);
            CHECK(cost <= rig.costs.slab_front + 1 + kMaxOrder);
            held.push_back(got.value());
        } else {
            size_t pick = rng() % held.size();
            REQUIRE(rig.alloc.free_page(held[pick]).ok());
            held.erase(held.begin() + pick);
        }
    }
}

TEST_CASE("meter total equals the sum of its categories") {
    AllocRig rig(64, 6);
    std::mt19937_64 rng(11);
    std::vector<FrameId> held;
    for (int op = 0; op < 1000; ++op) {
        if (held.empty() || rng() % 2 == 0) {
            auto got = rig.alloc.alloc_page();
            if (got.ok()) held.push_back(got.value());
        } else {
            size_t pick = rng() % held.size();
            REQUIRE(rig.alloc.free_page(held[pick]).ok());
            held.erase(held.begin() + pick);
        }
    }
    uint64_t sum = 0;
    for (size_t k = 0; k < kCostKindCount; ++k) {
        sum += rig.meter.category(static_cast<CostKind>(k));
    }
    CHECK(sum == rig.meter.total());

    StepMeter snap = rig.meter.snapshot();
    CHECK(snap.total() == rig.meter.total());
    rig.meter.reset();
    CHECK(rig.meter.total() == 0);
    CHECK(snap.total() == sum);  // snapshot unaffected by reset
}
