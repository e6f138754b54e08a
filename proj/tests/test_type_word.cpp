#include <random>

#include "doctest.h"
#include "ptmsim/type_word.hpp"

using namespace ptmsim;

TEST_CASE("type word packs the documented layout") {
    auto semi = encode_type_word(PageTypeCode::Writable, false, true, 3);
    REQUIRE(semi.ok());
    CHECK(semi.value() == 0x10400003u);

    auto l1 = encode_type_word(PageTypeCode::L1PageTable, true, false, 0);
    REQUIRE(l1.ok());
    CHECK(l1.value() == 0x24000000u);
}

TEST_CASE("refcount is capped at 22 bits") {
    auto over = encode_type_word(PageTypeCode::Writable, false, false, 4194304);
    REQUIRE(!over.ok());
    CHECK(over.error() == Err::RefcountOverflow);

    auto max = encode_type_word(PageTypeCode::Writable, false, false, 4194303);
    REQUIRE(max.ok());
    CHECK(decode_type_word(max.value()).value().refcount == 4194303u);
}

TEST_CASE("illegal flag combinations are rejected") {
    CHECK(encode_type_word(PageTypeCode::L2PageTable, false, true, 0).error() ==
          Err::InvalidCombination);
    CHECK(encode_type_word(PageTypeCode::Writable, true, false, 0).error() ==
          Err::InvalidCombination);
    CHECK(encode_type_word(PageTypeCode::OtherNonWritable, true, false, 0).error() ==
          Err::InvalidCombination);
}

TEST_CASE("decode inverts encode on the documented examples") {
    auto semi = decode_type_word(0x10400003u);
    REQUIRE(semi.ok());
    CHECK(semi.value() ==
          TypeWordFields{PageTypeCode::Writable, false, true, 3});

    auto l1 = decode_type_word(0x24000000u);
    REQUIRE(l1.ok());
    CHECK(l1.value() == TypeWordFields{PageTypeCode::L1PageTable, true, false, 0});
}

TEST_CASE("malformed words are rejected") {
    // bit 27 is reserved
    CHECK(decode_type_word(0x08000000u).error() == Err::MalformedWord);
    // undefined type code 6
    CHECK(decode_type_word(6u << 28).error() == Err::MalformedWord);
    // semi flag outside the writable code
    CHECK(decode_type_word((3u << 28) | (1u << 22)).error() == Err::MalformedWord);
    // validated flag outside the page-table codes
    CHECK(decode_type_word((1u << 28) | (1u << 26)).error() == Err::MalformedWord);
}

TEST_CASE("decode(encode(x)) round-trips over randomized valid tuples") {
    std::mt19937_64 rng(20260810);
    std::uniform_int_distribution<uint32_t> code_dist(0, 5);
    std::uniform_int_distribution<uint32_t> ref_dist(0, type_word::kRefcountMax);
    std::uniform_int_distribution<int> coin(0, 1);

    for (int i = 0; i < 2000; ++i) {
        auto code = static_cast<PageTypeCode>(code_dist(rng));
        bool semi = code == PageTypeCode::Writable && coin(rng);
        bool validated = is_page_table_code(code) && coin(rng);
        uint32_t refcount = ref_dist(rng);

        auto enc = encode_type_word(code, validated, semi, refcount);
        REQUIRE(enc.ok());
        auto dec = decode_type_word(enc.value());
        REQUIRE(dec.ok());
        CHECK(dec.value() == TypeWordFields{code, validated, semi, refcount});
    }
}
