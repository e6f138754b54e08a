#include "ptmsim/type_word.hpp"

namespace ptmsim {

const char* to_string(Err e) {
    switch (e) {
    case Err::RefcountOverflow: return "RefcountOverflow";
    case Err::RefcountUnderflow: return "RefcountUnderflow";
    case Err::InvalidCombination: return "InvalidCombination";
    case Err::MalformedWord: return "MalformedWord";
    case Err::TypeMismatch: return "TypeMismatch";
    case Err::EdgeNotAllowed: return "EdgeNotAllowed";
    case Err::RefCountNonZero: return "RefCountNonZero";
    case Err::ContentInvalid: return "ContentInvalid";
    case Err::StillReferenced: return "StillReferenced";
    case Err::OutOfMemory: return "OutOfMemory";
    case Err::NotAllocated: return "NotAllocated";
    case Err::BadState: return "BadState";
    case Err::AlreadyMapped: return "AlreadyMapped";
    case Err::MissingSelector: return "MissingSelector";
    case Err::Unmapped: return "Unmapped";
    case Err::DmaFault: return "DmaFault";
    case Err::Empty: return "Empty";
    case Err::Disabled: return "Disabled";
    case Err::DuplicateFrame: return "DuplicateFrame";
    case Err::AlreadyEnabled: return "AlreadyEnabled";
    case Err::AlreadyDisabled: return "AlreadyDisabled";
    case Err::IoError: return "IoError";
    }
    return "UnknownErr";
}

namespace {

bool code_defined(uint32_t code) {
    return code <= static_cast<uint32_t>(PageTypeCode::OtherNonWritable);
}

}  // namespace

Result<uint32_t> encode_type_word(PageTypeCode code, bool validated, bool semi,
                                  uint32_t refcount) {
    using namespace type_word;
    if (refcount > kRefcountMax) return Err::RefcountOverflow;
    if (semi && code != PageTypeCode::Writable) return Err::InvalidCombination;
    if (validated && !is_page_table_code(code)) return Err::InvalidCombination;

    uint32_t raw = static_cast<uint32_t>(code) << kTypeShift;
    if (validated) raw |= kValidatedBit;
    if (semi) raw |= kSemiBit;
    raw |= refcount;
    return raw;
}

Result<TypeWordFields> decode_type_word(uint32_t raw) {
    using namespace type_word;
    if (raw & kReservedMask) return Err::MalformedWord;
    uint32_t code_bits = (raw & kTypeMask) >> kTypeShift;
    if (!code_defined(code_bits)) return Err::MalformedWord;

    TypeWordFields f;
    f.code = static_cast<PageTypeCode>(code_bits);
    f.validated = (raw & kValidatedBit) != 0;
    f.semi = (raw & kSemiBit) != 0;
    f.refcount = raw & kRefcountMask;

    if (f.semi && f.code != PageTypeCode::Writable) return Err::MalformedWord;
    if (f.validated && !is_page_table_code(f.code)) return Err::MalformedWord;
    return f;
}

}  // namespace ptmsim
