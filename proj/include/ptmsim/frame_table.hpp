#pragma once

#include <optional>
#include <vector>

#include "ptmsim/type_word.hpp"
#include "ptmsim/types.hpp"

namespace ptmsim {

/// One slot of a page-table page. When present is false the target and
/// writable fields are ignored everywhere.
struct PtEntry {
    bool present = false;
    FrameId target;
    bool writable = false;
};

/// Entry counts per page-table level (PAE: 4-entry top level).
struct EntriesPerLevel {
    uint32_t l1 = 4;
    uint32_t l2 = 512;
    uint32_t l3 = 512;

    uint32_t at(PageLevel lv) const {
        switch (lv) {
        case PageLevel::L1: return l1;
        case PageLevel::L2: return l2;
        case PageLevel::L3: return l3;
        }
        return 0;
    }
};

/// Owns every physical frame's packed type word, typed reference count,
/// owning domain, and (for page-table pages) the entry array.
///
/// Entry arrays are staged while the frame is still software-writable:
/// the guest fills the page's contents first, then asks the guard to
/// validate and retype it. The array persists while the frame holds a
/// page-table type and is cleared on devalidation or free.
class FrameTable {
public:
    FrameTable(uint32_t pool_size, EntriesPerLevel epl, DomainId default_domain = 0);

    uint32_t pool_size() const { return static_cast<uint32_t>(records_.size()); }
    bool exists(FrameId f) const { return f.index < pool_size(); }

    uint32_t raw_word(FrameId f) const;
    TypeWordFields fields(FrameId f) const;
    DomainId domain(FrameId f) const;

    /// Rewrites the frame's word. Invariant-violating combinations abort
    /// the run (callers are the allocator and the guard, never the guest).
    void write_word(FrameId f, PageTypeCode code, bool validated, bool semi,
                    uint32_t refcount);
    /// Restores a previously captured raw word (transition rollback).
    void write_raw(FrameId f, uint32_t raw);

    /// Increment the typed refcount if the frame currently holds `expected`.
    Result<uint32_t> try_get_ref(FrameId f, PageTypeCode expected);
    /// Decrement the typed refcount.
    Result<uint32_t> put_ref(FrameId f);

    // --- page-table content staging -------------------------------------
    /// Attach a blank entry array sized for `level`. The frame must be
    /// software-writable (Writable code, semi or not).
    Status stage_entries(FrameId f, PageLevel level);
    Status set_entry(FrameId f, uint32_t slot, PtEntry entry);
    void clear_entries(FrameId f);
    /// Restore a previously captured entry array (transition rollback).
    void restore_entries(FrameId f, std::optional<std::vector<PtEntry>> entries,
                         std::optional<PageLevel> level);

    const std::vector<PtEntry>* entries(FrameId f) const;
    std::optional<PageLevel> entries_level(FrameId f) const;

    uint32_t entries_per_level(PageLevel lv) const { return epl_.at(lv); }

    /// Number of frames currently holding a page-table type code.
    uint32_t live_pt_pages() const { return live_pt_; }

    /// Re-decodes every word; throws SimAbort on any malformed word or
    /// refcount past the cap.
    void audit_words() const;

private:
    struct Record {
        uint32_t raw = 0;  // Untracked, refcount 0
        DomainId domain = 0;
        std::optional<std::vector<PtEntry>> entries;
        std::optional<PageLevel> entries_level;
    };

    Record& rec(FrameId f);
    const Record& rec(FrameId f) const;

    std::vector<Record> records_;
    EntriesPerLevel epl_;
    uint32_t live_pt_ = 0;
};

}  // namespace ptmsim
