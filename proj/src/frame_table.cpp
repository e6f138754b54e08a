#include "ptmsim/frame_table.hpp"

#include <string>

namespace ptmsim {

FrameTable::FrameTable(uint32_t pool_size, EntriesPerLevel epl, DomainId default_domain)
    : epl_(epl) {
    records_.resize(pool_size);
    for (auto& r : records_) r.domain = default_domain;
}

FrameTable::Record& FrameTable::rec(FrameId f) {
    if (!exists(f)) throw SimAbort("frame index out of range: " + std::to_string(f.index));
    return records_[f.index];
}

const FrameTable::Record& FrameTable::rec(FrameId f) const {
    if (!exists(f)) throw SimAbort("frame index out of range: " + std::to_string(f.index));
    return records_[f.index];
}

uint32_t FrameTable::raw_word(FrameId f) const { return rec(f).raw; }

TypeWordFields FrameTable::fields(FrameId f) const {
    auto d = decode_type_word(rec(f).raw);
    if (!d.ok()) throw SimAbort("corrupt type word on frame " + std::to_string(f.index));
    return d.value();
}

DomainId FrameTable::domain(FrameId f) const { return rec(f).domain; }

void FrameTable::write_word(FrameId f, PageTypeCode code, bool validated, bool semi,
                            uint32_t refcount) {
    auto enc = encode_type_word(code, validated, semi, refcount);
    if (!enc.ok()) {
        throw SimAbort("illegal type word write on frame " + std::to_string(f.index) +
                       ": " + to_string(enc.error()));
    }
    Record& r = rec(f);
    bool was_pt = is_page_table_code(fields(f).code);
    bool is_pt = is_page_table_code(code);
    if (was_pt && !is_pt) --live_pt_;
    if (!was_pt && is_pt) ++live_pt_;
    r.raw = enc.value();
}

void FrameTable::write_raw(FrameId f, uint32_t raw) {
    auto d = decode_type_word(raw);
    if (!d.ok()) {
        throw SimAbort("illegal raw word restore on frame " + std::to_string(f.index));
    }
    Record& r = rec(f);
    bool was_pt = is_page_table_code(fields(f).code);
    bool is_pt = is_page_table_code(d.value().code);
    if (was_pt && !is_pt) --live_pt_;
    if (!was_pt && is_pt) ++live_pt_;
    r.raw = raw;
}

Result<uint32_t> FrameTable::try_get_ref(FrameId f, PageTypeCode expected) {
    TypeWordFields w = fields(f);
    if (w.code != expected) return Err::TypeMismatch;
    if (w.refcount >= type_word::kRefcountMax) return Err::RefcountOverflow;
    uint32_t next = w.refcount + 1;
    rec(f).raw = (rec(f).raw & ~type_word::kRefcountMask) | next;
    return next;
}

Result<uint32_t> FrameTable::put_ref(FrameId f) {
    TypeWordFields w = fields(f);
    if (w.refcount == 0) return Err::RefcountUnderflow;
    uint32_t next = w.refcount - 1;
    rec(f).raw = (rec(f).raw & ~type_word::kRefcountMask) | next;
    return next;
}

Status FrameTable::stage_entries(FrameId f, PageLevel level) {
    Record& r = rec(f);
    if (fields(f).code != PageTypeCode::Writable) return Err::BadState;
    r.entries.emplace(epl_.at(level));
    r.entries_level = level;
    return Status::ok_status();
}

Status FrameTable::set_entry(FrameId f, uint32_t slot, PtEntry entry) {
    Record& r = rec(f);
    if (fields(f).code != PageTypeCode::Writable) return Err::BadState;
    if (!r.entries || slot >= r.entries->size()) return Err::BadState;
    (*r.entries)[slot] = entry;
    return Status::ok_status();
}

void FrameTable::clear_entries(FrameId f) {
    Record& r = rec(f);
    r.entries.reset();
    r.entries_level.reset();
}

void FrameTable::restore_entries(FrameId f, std::optional<std::vector<PtEntry>> entries,
                                 std::optional<PageLevel> level) {
    Record& r = rec(f);
    r.entries = std::move(entries);
    r.entries_level = level;
}

const std::vector<PtEntry>* FrameTable::entries(FrameId f) const {
    const Record& r = rec(f);
    return r.entries ? &*r.entries : nullptr;
}

std::optional<PageLevel> FrameTable::entries_level(FrameId f) const {
    return rec(f).entries_level;
}

void FrameTable::audit_words() const {
    uint32_t pt = 0;
    for (uint32_t i = 0; i < pool_size(); ++i) {
        auto d = decode_type_word(records_[i].raw);
        if (!d.ok()) throw SimAbort("audit: malformed word on frame " + std::to_string(i));
        if (is_page_table_code(d.value().code)) ++pt;
    }
    if (pt != live_pt_) throw SimAbort("audit: live page-table counter drift");
}

}  // namespace ptmsim
