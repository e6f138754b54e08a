#include "doctest.h"
#include "ptmsim/frame_table.hpp"

using namespace ptmsim;

TEST_CASE("typed reference counting") {
    FrameTable ft(4, EntriesPerLevel{});
    FrameId f0(0), f1(1), f2(2);
    ft.write_word(f0, PageTypeCode::Writable, false, false, 0);
    ft.write_word(f1, PageTypeCode::L2PageTable, true, false, 0);
    ft.write_word(f2, PageTypeCode::Writable, false, false, 4194303);

    SUBCASE("increment under the matching type") {
        auto r = ft.try_get_ref(f0, PageTypeCode::Writable);
        REQUIRE(r.ok());
        CHECK(r.value() == 1);
        CHECK(ft.fields(f0).refcount == 1);
    }
    SUBCASE("type mismatch leaves the count alone") {
        auto r = ft.try_get_ref(f1, PageTypeCode::Writable);
        REQUIRE(!r.ok());
        CHECK(r.error() == Err::TypeMismatch);
        CHECK(ft.fields(f1).refcount == 0);
    }
    SUBCASE("increment at the cap overflows") {
        auto r = ft.try_get_ref(f2, PageTypeCode::Writable);
        REQUIRE(!r.ok());
        CHECK(r.error() == Err::RefcountOverflow);
    }
    SUBCASE("decrement") {
        REQUIRE(ft.try_get_ref(f0, PageTypeCode::Writable).ok());
        CHECK(ft.put_ref(f0).value() == 0);
        CHECK(ft.put_ref(f0).error() == Err::RefcountUnderflow);
        CHECK(ft.put_ref(f2).value() == 4194302);
    }
}

TEST_CASE("entry staging is limited to software-writable frames") {
    FrameTable ft(4, EntriesPerLevel{4, 8, 8});
    FrameId f(0);

    CHECK(ft.stage_entries(f, PageLevel::L2).error() == Err::BadState);  // Untracked

    ft.write_word(f, PageTypeCode::Writable, false, false, 0);
    REQUIRE(ft.stage_entries(f, PageLevel::L2).ok());
    REQUIRE(ft.entries(f) != nullptr);
    CHECK(ft.entries(f)->size() == 8);
    CHECK(ft.entries_level(f) == PageLevel::L2);
    CHECK(ft.set_entry(f, 0, PtEntry{true, FrameId(1), false}).ok());
    CHECK(ft.set_entry(f, 8, PtEntry{}).error() == Err::BadState);  // slot range

    // A page-table page's contents are no longer guest-writable.
    ft.write_word(f, PageTypeCode::L2PageTable, true, false, 0);
    CHECK(ft.set_entry(f, 1, PtEntry{}).error() == Err::BadState);

    ft.clear_entries(f);
    CHECK(ft.entries(f) == nullptr);
}

TEST_CASE("live page-table counter follows word writes") {
    FrameTable ft(4, EntriesPerLevel{});
    CHECK(ft.live_pt_pages() == 0);
    ft.write_word(FrameId(0), PageTypeCode::Writable, false, false, 0);
    ft.write_word(FrameId(1), PageTypeCode::L3PageTable, true, false, 0);
    ft.write_word(FrameId(2), PageTypeCode::L1PageTable, false, false, 0);
    CHECK(ft.live_pt_pages() == 2);
    ft.write_word(FrameId(1), PageTypeCode::Writable, false, true, 0);
    CHECK(ft.live_pt_pages() == 1);
    ft.audit_words();
}

TEST_CASE("word writes enforce the packing invariants") {
    FrameTable ft(2, EntriesPerLevel{});
    CHECK_THROWS_AS(ft.write_word(FrameId(0), PageTypeCode::L2PageTable, false, true, 0),
                    SimAbort);
    CHECK_THROWS_AS(ft.write_word(FrameId(0), PageTypeCode::Writable, false, false,
                                  4194304),
                    SimAbort);
    CHECK_THROWS_AS(ft.write_word(FrameId(7), PageTypeCode::Writable, false, false, 0),
                    SimAbort);
}
