// Independent reference models used to cross-check the implementation.
// They share no code with the library paths they verify.
#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "ptmsim/frame_table.hpp"
#include "ptmsim/types.hpp"

namespace oracles {

/// Naive bitmap allocator: tracks only which frames are allocated.
class BitmapAlloc {
public:
    explicit BitmapAlloc(uint32_t pool) : allocated_(pool, false) {}

    bool on_alloc(uint32_t frame) {
        if (frame >= allocated_.size() || allocated_[frame]) return false;
        allocated_[frame] = true;
        return true;
    }
    bool on_free(uint32_t frame) {
        if (frame >= allocated_.size() || !allocated_[frame]) return false;
        allocated_[frame] = false;
        return true;
    }

    uint32_t free_count() const {
        uint32_t n = 0;
        for (bool a : allocated_) n += a ? 0 : 1;
        return n;
    }
    std::set<uint32_t> free_set() const {
        std::set<uint32_t> s;
        for (uint32_t i = 0; i < allocated_.size(); ++i) {
            if (!allocated_[i]) s.insert(i);
        }
        return s;
    }

private:
    std::vector<bool> allocated_;
};

/// Brute-force LRU cache keyed by (domain, io_page) packed into u64.
class LruOracle {
public:
    explicit LruOracle(size_t capacity) : capacity_(capacity) {}

    /// Returns true on hit.
    bool access(uint64_t key) {
        auto it = std::find(recency_.begin(), recency_.end(), key);
        if (it != recency_.end()) {
            recency_.erase(it);
            recency_.push_back(key);
            return true;
        }
        if (recency_.size() >= capacity_) recency_.erase(recency_.begin());
        recency_.push_back(key);
        return false;
    }

    bool contains(uint64_t key) const {
        return std::find(recency_.begin(), recency_.end(), key) != recency_.end();
    }
    void flush_all() { recency_.clear(); }
    void flush_key(uint64_t key) {
        auto it = std::find(recency_.begin(), recency_.end(), key);
        if (it != recency_.end()) recency_.erase(it);
    }
    size_t size() const { return recency_.size(); }

private:
    size_t capacity_;
    std::vector<uint64_t> recency_;  // front = least recently used
};

/// Hand-written transition policy tables, stated independently of the
/// guard's edge sets.
inline bool coarse_policy(ptmsim::TypeState a, ptmsim::TypeState b) {
    using S = ptmsim::TypeState;
    auto pt = [](S s) { return s == S::PtL1 || s == S::PtL2 || s == S::PtL3; };
    if (a == S::Writable && pt(b)) return true;
    if (pt(a) && b == S::Writable) return true;
    if (a == S::Writable && b == S::Other) return true;
    if (a == S::Other && b == S::Writable) return true;
    return false;
}

inline bool fine_policy(ptmsim::TypeState a, ptmsim::TypeState b) {
    using S = ptmsim::TypeState;
    auto pt = [](S s) { return s == S::PtL1 || s == S::PtL2 || s == S::PtL3; };
    if (a == S::Writable && b == S::Semi) return true;
    if (a == S::Semi && b == S::Writable) return true;
    if (a == S::Semi && pt(b)) return true;
    if (pt(a) && b == S::Semi) return true;
    if (a == S::Writable && b == S::Other) return true;
    if (a == S::Other && b == S::Writable) return true;
    return false;
}

/// Recomputes every frame's expected refcount from the validated
/// page-table contents alone.
inline std::vector<uint32_t> expected_refcounts(const ptmsim::FrameTable& frames) {
    std::vector<uint32_t> expected(frames.pool_size(), 0);
    for (uint32_t i = 0; i < frames.pool_size(); ++i) {
        ptmsim::FrameId f(i);
        ptmsim::TypeWordFields w = frames.fields(f);
        if (!w.validated) continue;
        const auto* ents = frames.entries(f);
        if (!ents) continue;
        bool bottom = w.code == ptmsim::PageTypeCode::L3PageTable;
        for (const ptmsim::PtEntry& e : *ents) {
            if (!e.present) continue;
            if (bottom && !e.writable) continue;
            expected[e.target.index] += 1;
        }
    }
    return expected;
}

}  // namespace oracles
