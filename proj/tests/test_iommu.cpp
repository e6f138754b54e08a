#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "ptmsim/iommu.hpp"

using namespace ptmsim;

namespace {

struct IommuRig {
    FrameTable frames;
    IommuModel iommu;

    IommuRig(uint32_t pool, uint32_t capacity, uint32_t domains = 1)
        : frames(pool, EntriesPerLevel{}),
          iommu(frames, IommuConfig{capacity, 10, domains}) {}

    FrameId writable(uint32_t i) {
        frames.write_word(FrameId(i), PageTypeCode::Writable, false, false, 0);
        return FrameId(i);
    }
    FrameId semi(uint32_t i) {
        frames.write_word(FrameId(i), PageTypeCode::Writable, false, true, 0);
        return FrameId(i);
    }
    FrameId pt3(uint32_t i) {
        frames.write_word(FrameId(i), PageTypeCode::L3PageTable, true, false, 0);
        return FrameId(i);
    }
};

}  // namespace

TEST_CASE("permission policy per type state") {
    CHECK(IommuModel::perms_for_state(TypeState::Writable) == kDmaReadWrite);
    CHECK(IommuModel::perms_for_state(TypeState::Semi) == kDmaNone);
    CHECK(IommuModel::perms_for_state(TypeState::PtL3) == kDmaNone);
    CHECK(IommuModel::perms_for_state(TypeState::Other) == kDmaNone);
}

TEST_CASE("mapping derives perms from the frame's current state") {
    IommuRig rig(16, 8);
    FrameId w = rig.writable(3);
    REQUIRE(rig.iommu.map_io(0, 7, w).ok());
    CHECK(rig.iommu.mapping_perms(0, 7) == kDmaReadWrite);

    CHECK(rig.iommu.map_io(0, 7, w).error() == Err::AlreadyMapped);

    FrameId s = rig.semi(9);
    REQUIRE(rig.iommu.map_io(0, 8, s).ok());
    CHECK(rig.iommu.mapping_perms(0, 8) == kDmaNone);
}

TEST_CASE("permission rewrites touch every mapping of the frame") {
    IommuRig rig(16, 8);
    FrameId f = rig.writable(2);
    REQUIRE(rig.iommu.map_io(0, 1, f).ok());
    REQUIRE(rig.iommu.map_io(0, 5, f).ok());
    REQUIRE(rig.iommu.map_io(0, 9, f).ok());

    CHECK(rig.iommu.set_frame_dma_perms(f, kDmaNone) == 3);
    CHECK(rig.iommu.mapping_perms(0, 1) == kDmaNone);
    CHECK(rig.iommu.mapping_perms(0, 5) == kDmaNone);
    CHECK(rig.iommu.mapping_perms(0, 9) == kDmaNone);

    CHECK(rig.iommu.set_frame_dma_perms(rig.writable(4), kDmaNone) == 0);
}

TEST_CASE("stale IOTLB entries keep granting old perms until flushed") {
    IommuRig rig(16, 8);
    FrameId f = rig.writable(2);
    REQUIRE(rig.iommu.map_io(0, 1, f).ok());
    REQUIRE(rig.iommu.translate(0, 1, false).ok());  // cache the RW entry

    // Retype the frame and update the IOMMU page table, but skip the flush.
    rig.semi(2);
    CHECK(rig.iommu.set_frame_dma_perms(f, kDmaNone) == 1);
    CHECK(rig.iommu.cached_perms(0, 1) == kDmaReadWrite);

    auto write = rig.iommu.translate(0, 1, true);
    CHECK(write.ok());  // the staleness window
    CHECK(rig.iommu.stats().stale_hits == 1);
    CHECK(rig.iommu.stats().writes_to_protected == 1);

    // The flush closes the window.
    REQUIRE(rig.iommu.flush(InvalidationScheme::PageSelective, 0, 1).ok());
    auto write2 = rig.iommu.translate(0, 1, true);
    REQUIRE(!write2.ok());
    CHECK(write2.error() == Err::DmaFault);
}

TEST_CASE("flush granularities") {
    IommuRig rig(16, 8, 2);
    for (uint32_t i = 0; i < 3; ++i) {
        REQUIRE(rig.iommu.map_io(0, i, rig.writable(i)).ok());
        REQUIRE(rig.iommu.translate(0, i, false).ok());
    }
    for (uint32_t i = 3; i < 5; ++i) {
        REQUIRE(rig.iommu.map_io(1, i, rig.writable(i)).ok());
        REQUIRE(rig.iommu.translate(1, i, false).ok());
    }
    REQUIRE(rig.iommu.cached_entries() == 5);

    SUBCASE("global invalidation drops everything") {
        auto n = rig.iommu.flush(InvalidationScheme::Global);
        REQUIRE(n.ok());
        CHECK(n.value() == 5);
        CHECK(rig.iommu.cached_entries() == 0);
    }
    SUBCASE("domain-selective invalidation drops one domain") {
        auto n = rig.iommu.flush(InvalidationScheme::DomainSelective, 0);
        REQUIRE(n.ok());
        CHECK(n.value() == 3);
        CHECK(rig.iommu.cached_entries() == 2);
    }
    SUBCASE("page-selective invalidation drops at most one entry") {
        auto n = rig.iommu.flush(InvalidationScheme::PageSelective, 0, 1);
        REQUIRE(n.ok());
        CHECK(n.value() == 1);
        auto none = rig.iommu.flush(InvalidationScheme::PageSelective, 0, 14);
        REQUIRE(none.ok());
        CHECK(none.value() == 0);
    }
    SUBCASE("selector requirements") {
        CHECK(rig.iommu.flush(InvalidationScheme::DomainSelective).error() ==
              Err::MissingSelector);
        CHECK(rig.iommu.flush(InvalidationScheme::PageSelective, 0).error() ==
              Err::MissingSelector);
    }
}

TEST_CASE("translate walks, caches, and evicts least-recently-used") {
    IommuRig rig(16, 2);
    for (uint32_t i = 0; i < 3; ++i) {
        REQUIRE(rig.iommu.map_io(0, i, rig.writable(i)).ok());
    }
    // A miss, B miss, A hit, C miss (evicts B), B miss.
    REQUIRE(rig.iommu.translate(0, 0, false).ok());
    REQUIRE(rig.iommu.translate(0, 1, false).ok());
    REQUIRE(rig.iommu.translate(0, 0, false).ok());
    REQUIRE(rig.iommu.translate(0, 2, false).ok());
    CHECK(!rig.iommu.cached_perms(0, 1).has_value());  // B evicted
    REQUIRE(rig.iommu.translate(0, 1, false).ok());

    CHECK(rig.iommu.stats().hits == 1);
    CHECK(rig.iommu.stats().misses == 4);
    CHECK(rig.iommu.stats().walk_cost_total == 4 * 10);
}

TEST_CASE("faults and unmapped pages") {
    IommuRig rig(16, 4);
    REQUIRE(rig.iommu.map_io(0, 0, rig.pt3(0)).ok());

    auto w = rig.iommu.translate(0, 0, true);
    REQUIRE(!w.ok());
    CHECK(w.error() == Err::DmaFault);
    auto r = rig.iommu.translate(0, 0, false);  // page tables are non-readable too
    REQUIRE(!r.ok());
    CHECK(r.error() == Err::DmaFault);
    CHECK(rig.iommu.stats().dma_blocked == 2);
    CHECK(rig.iommu.stats().writes_to_protected == 0);

    auto u = rig.iommu.translate(0, 13, false);
    REQUIRE(!u.ok());
    CHECK(u.error() == Err::Unmapped);
}

TEST_CASE("random translation traces match the brute-force LRU oracle") {
    constexpr uint32_t kCapacity = 8;
    constexpr uint32_t kPages = 24;
    IommuRig rig(32, kCapacity);
    for (uint32_t i = 0; i < kPages; ++i) {
        REQUIRE(rig.iommu.map_io(0, i, rig.writable(i)).ok());
    }
    oracles::LruOracle oracle(kCapacity);
    std::mt19937_64 rng(123);

    uint64_t hits = 0, misses = 0;
    for (int op = 0; op < 1000; ++op) {
        uint32_t page = rng() % kPages;
        bool expect_hit = oracle.access(page);
        uint64_t before_hits = rig.iommu.stats().hits;
        REQUIRE(rig.iommu.translate(0, page, false).ok());
        bool was_hit = rig.iommu.stats().hits > before_hits;
        CHECK(was_hit == expect_hit);
        (was_hit ? hits : misses) += 1;
        CHECK(rig.iommu.cached_entries() <= kCapacity);
    }
    CHECK(rig.iommu.stats().hits == hits);
    CHECK(rig.iommu.stats().misses == misses);
}

TEST_CASE("counter conservation") {
    IommuRig rig(16, 2);
    for (uint32_t i = 0; i < 6; ++i) {
        REQUIRE(rig.iommu.map_io(0, i, rig.writable(i)).ok());
    }
    std::mt19937_64 rng(5);
    uint64_t calls = 0;
    for (int op = 0; op < 500; ++op) {
        if (op % 37 == 0) {
            (void)rig.iommu.flush(InvalidationScheme::Global);
        }
        (void)rig.iommu.translate(0, rng() % 8, rng() % 2 == 0);  // some unmapped
        ++calls;
    }
    const IotlbStats& st = rig.iommu.stats();
    CHECK(st.hits + st.misses == calls);
    CHECK(st.flushed_entries <= st.insertions);
}
