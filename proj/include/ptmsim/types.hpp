#pragma once

#include <cassert>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

namespace ptmsim {

/// Identity of one physical frame. Frames are fixed at 4096 bytes; the
/// index is the sole identity used across all modules.
struct FrameId {
    static constexpr uint32_t kInvalid = 0xffffffffu;

    uint32_t index = kInvalid;

    constexpr FrameId() = default;
    constexpr explicit FrameId(uint32_t i) : index(i) {}

    constexpr bool valid() const { return index != kInvalid; }
    constexpr auto operator<=>(const FrameId&) const = default;
};

constexpr uint64_t kFrameBytes = 4096;

using DomainId = uint32_t;

/// Page-table levels, top to bottom (PAE three-level paging).
enum class PageLevel : uint8_t { L1 = 0, L2 = 1, L3 = 2 };

constexpr size_t level_index(PageLevel lv) { return static_cast<size_t>(lv); }

/// 4-bit page type codes stored in the type word.
enum class PageTypeCode : uint8_t {
    Untracked = 0,  // free / not owned by the guest
    Writable = 1,
    L1PageTable = 2,
    L2PageTable = 3,
    L3PageTable = 4,
    OtherNonWritable = 5,
};

constexpr bool is_page_table_code(PageTypeCode c) {
    return c == PageTypeCode::L1PageTable || c == PageTypeCode::L2PageTable ||
           c == PageTypeCode::L3PageTable;
}

constexpr PageTypeCode page_table_code(PageLevel lv) {
    switch (lv) {
    case PageLevel::L1: return PageTypeCode::L1PageTable;
    case PageLevel::L2: return PageTypeCode::L2PageTable;
    case PageLevel::L3: return PageTypeCode::L3PageTable;
    }
    return PageTypeCode::Untracked;
}

constexpr std::optional<PageLevel> level_of_code(PageTypeCode c) {
    switch (c) {
    case PageTypeCode::L1PageTable: return PageLevel::L1;
    case PageTypeCode::L2PageTable: return PageLevel::L2;
    case PageTypeCode::L3PageTable: return PageLevel::L3;
    default: return std::nullopt;
    }
}

/// IOTLB invalidation granularities.
enum class InvalidationScheme : uint8_t { Global, DomainSelective, PageSelective };

/// Validation scheme enforced by the type guard.
enum class ValidationMode : uint8_t { Coarse, FineGrained };

/// Node identity in the type-transition graph: (type code, semi flag).
enum class TypeState : uint8_t { Writable, Semi, PtL1, PtL2, PtL3, Other };

constexpr PageTypeCode code_of_state(TypeState s) {
    switch (s) {
    case TypeState::Writable: return PageTypeCode::Writable;
    case TypeState::Semi: return PageTypeCode::Writable;
    case TypeState::PtL1: return PageTypeCode::L1PageTable;
    case TypeState::PtL2: return PageTypeCode::L2PageTable;
    case TypeState::PtL3: return PageTypeCode::L3PageTable;
    case TypeState::Other: return PageTypeCode::OtherNonWritable;
    }
    return PageTypeCode::Untracked;
}

constexpr bool state_is_semi(TypeState s) { return s == TypeState::Semi; }

constexpr bool state_is_page_table(TypeState s) {
    return s == TypeState::PtL1 || s == TypeState::PtL2 || s == TypeState::PtL3;
}

constexpr std::optional<PageLevel> level_of_state(TypeState s) {
    switch (s) {
    case TypeState::PtL1: return PageLevel::L1;
    case TypeState::PtL2: return PageLevel::L2;
    case TypeState::PtL3: return PageLevel::L3;
    default: return std::nullopt;
    }
}

constexpr TypeState page_table_state(PageLevel lv) {
    switch (lv) {
    case PageLevel::L1: return TypeState::PtL1;
    case PageLevel::L2: return TypeState::PtL2;
    case PageLevel::L3: return TypeState::PtL3;
    }
    return TypeState::Writable;
}

/// Maps (code, semi) back to a transition-graph node. Untracked frames are
/// not part of the graph.
constexpr std::optional<TypeState> state_from(PageTypeCode code, bool semi) {
    switch (code) {
    case PageTypeCode::Writable: return semi ? TypeState::Semi : TypeState::Writable;
    case PageTypeCode::L1PageTable: return TypeState::PtL1;
    case PageTypeCode::L2PageTable: return TypeState::PtL2;
    case PageTypeCode::L3PageTable: return TypeState::PtL3;
    case PageTypeCode::OtherNonWritable: return TypeState::Other;
    default: return std::nullopt;
    }
}

const char* to_string(TypeState s);

enum class Err : uint8_t {
    RefcountOverflow,
    RefcountUnderflow,
    InvalidCombination,
    MalformedWord,
    TypeMismatch,
    EdgeNotAllowed,
    RefCountNonZero,
    ContentInvalid,
    StillReferenced,
    OutOfMemory,
    NotAllocated,
    BadState,
    AlreadyMapped,
    MissingSelector,
    Unmapped,
    DmaFault,
    Empty,
    Disabled,
    DuplicateFrame,
    AlreadyEnabled,
    AlreadyDisabled,
    IoError,
};

const char* to_string(Err e);

/// Value-or-error return for operations whose failures are part of the
/// domain contract (type mismatches, refcount caps, cache misses, ...).
template <typename T>
class [[nodiscard]] Result {
public:
    Result(T value) : value_(std::move(value)) {}
    Result(Err err) : err_(err) {}

    bool ok() const { return !err_.has_value(); }
    explicit operator bool() const { return ok(); }

    const T& value() const& {
        assert(ok());
        return *value_;
    }
    T& value() & {
        assert(ok());
        return *value_;
    }
    Err error() const {
        assert(!ok());
        return *err_;
    }

private:
    std::optional<T> value_;
    std::optional<Err> err_;
};

/// Result with no payload.
class [[nodiscard]] Status {
public:
    Status() = default;
    Status(Err err) : err_(err) {}

    static Status ok_status() { return Status(); }

    bool ok() const { return !err_.has_value(); }
    explicit operator bool() const { return ok(); }
    Err error() const {
        assert(!ok());
        return *err_;
    }

private:
    std::optional<Err> err_;
};

/// Internal invariant violation: corrupt simulator state. Aborts the run.
struct SimAbort : std::logic_error {
    explicit SimAbort(const std::string& what) : std::logic_error(what) {}
};

}  // namespace ptmsim

template <>
struct std::hash<ptmsim::FrameId> {
    size_t operator()(const ptmsim::FrameId& f) const noexcept {
        return std::hash<uint32_t>{}(f.index);
    }
};
