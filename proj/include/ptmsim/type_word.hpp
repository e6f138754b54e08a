#pragma once

#include "ptmsim/types.hpp"

namespace ptmsim {

// Packed 32-bit page state word:
//   bits 28..31  page type code
//   bit  27      reserved (0)
//   bit  26      validated flag (page-table types only)
//   bits 23..25  reserved (0)
//   bit  22      semi-writable flag (Writable code only)
//   bits 0..21   type reference count
namespace type_word {

constexpr uint32_t kTypeShift = 28;
constexpr uint32_t kTypeMask = 0xfu << kTypeShift;
constexpr uint32_t kValidatedBit = 1u << 26;
constexpr uint32_t kSemiBit = 1u << 22;
constexpr uint32_t kRefcountMask = (1u << 22) - 1;
constexpr uint32_t kReservedMask =
    (1u << 23) | (1u << 24) | (1u << 25) | (1u << 27);

constexpr uint32_t kRefcountMax = kRefcountMask;  // 4194303

}  // namespace type_word

/// Decoded view of a type word.
struct TypeWordFields {
    PageTypeCode code = PageTypeCode::Untracked;
    bool validated = false;
    bool semi = false;
    uint32_t refcount = 0;

    constexpr auto operator<=>(const TypeWordFields&) const = default;
};

/// Packs the fields, rejecting illegal flag combinations and refcounts
/// past the 22-bit cap.
Result<uint32_t> encode_type_word(PageTypeCode code, bool validated, bool semi,
                                  uint32_t refcount);

/// Exact inverse of encode_type_word. Words with reserved bits set, an
/// undefined code, or an invariant-violating flag combination are malformed.
Result<TypeWordFields> decode_type_word(uint32_t raw);

}  // namespace ptmsim
