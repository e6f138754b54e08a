#include "ptmsim/iommu.hpp"

namespace ptmsim {

const char* to_string(TypeState s) {
    switch (s) {
    case TypeState::Writable: return "writable";
    case TypeState::Semi: return "semi-writable";
    case TypeState::PtL1: return "pt-l1";
    case TypeState::PtL2: return "pt-l2";
    case TypeState::PtL3: return "pt-l3";
    case TypeState::Other: return "other-non-writable";
    }
    return "unknown";
}

IommuModel::IommuModel(FrameTable& frames, IommuConfig cfg)
    : frames_(frames), cfg_(cfg) {}

DmaPerms IommuModel::perms_for_state(TypeState s) {
    return s == TypeState::Writable ? kDmaReadWrite : kDmaNone;
}

DmaPerms IommuModel::perms_for_frame(FrameId f) const {
    TypeWordFields w = frames_.fields(f);
    if (w.code == PageTypeCode::Untracked) return kDmaReadWrite;
    auto st = state_from(w.code, w.semi);
    if (!st) return kDmaNone;
    return perms_for_state(*st);
}

Status IommuModel::map_io(DomainId domain, uint32_t io_page, FrameId frame) {
    IoKey key{domain, io_page};
    if (mappings_.count(key)) return Err::AlreadyMapped;
    mappings_.emplace(key, Mapping{frame, perms_for_frame(frame)});
    frame_keys_[frame.index].push_back(key);
    return Status::ok_status();
}

uint32_t IommuModel::set_frame_dma_perms(FrameId frame, DmaPerms perms,
                                         std::vector<IoKey>* updated_keys) {
    auto it = frame_keys_.find(frame.index);
    if (it == frame_keys_.end()) return 0;
    uint32_t updated = 0;
    for (const IoKey& key : it->second) {
        mappings_.at(key).perms = perms;
        if (updated_keys) updated_keys->push_back(key);
        ++updated;
    }
    return updated;
}

Result<uint32_t> IommuModel::flush(InvalidationScheme scheme,
                                   std::optional<DomainId> domain,
                                   std::optional<uint32_t> io_page) {
    uint32_t removed = 0;
    switch (scheme) {
    case InvalidationScheme::Global:
        removed = static_cast<uint32_t>(tlb_.size());
        tlb_.clear();
        break;
    case InvalidationScheme::DomainSelective: {
        if (!domain) return Err::MissingSelector;
        for (auto it = tlb_.begin(); it != tlb_.end();) {
            if (it->first.domain == *domain) {
                it = tlb_.erase(it);
                ++removed;
            } else {
                ++it;
            }
        }
        break;
    }
    case InvalidationScheme::PageSelective: {
        if (!domain || !io_page) return Err::MissingSelector;
        removed = static_cast<uint32_t>(tlb_.erase(IoKey{*domain, *io_page}));
        break;
    }
    }
    stats_.flushes_total += 1;
    stats_.flushed_entries += removed;
    return removed;
}

void IommuModel::insert_tlb(const IoKey& key, const Mapping& m) {
    if (tlb_.size() >= cfg_.iotlb_capacity) {
        auto victim = tlb_.begin();
        for (auto it = tlb_.begin(); it != tlb_.end(); ++it) {
            if (it->second.stamp < victim->second.stamp) victim = it;
        }
        tlb_.erase(victim);
    }
    tlb_[key] = TlbEntry{m.frame, m.perms, ++stamp_counter_};
    stats_.insertions += 1;
}

Result<FrameId> IommuModel::translate(DomainId domain, uint32_t io_page, bool is_write) {
    IoKey key{domain, io_page};
    FrameId frame;
    DmaPerms perms;

    auto cached = tlb_.find(key);
    if (cached != tlb_.end()) {
        stats_.hits += 1;
        cached->second.stamp = ++stamp_counter_;
        frame = cached->second.frame;
        perms = cached->second.perms;
        auto live = mappings_.find(key);
        if (live == mappings_.end() || live->second.perms != perms) {
            stats_.stale_hits += 1;
        }
    } else {
        stats_.misses += 1;
        auto live = mappings_.find(key);
        if (live == mappings_.end()) return Err::Unmapped;
        stats_.walk_cost_total += cfg_.walk_cost;
        insert_tlb(key, live->second);
        frame = live->second.frame;
        perms = live->second.perms;
    }

    if (is_write ? !perms.write : !perms.read) {
        stats_.dma_blocked += 1;
        return Err::DmaFault;
    }
    if (is_write) {
        TypeWordFields w = frames_.fields(frame);
        if (w.semi || is_page_table_code(w.code) ||
            w.code == PageTypeCode::OtherNonWritable) {
            stats_.writes_to_protected += 1;
        }
    }
    return frame;
}

uint32_t IommuModel::mappings_of_frame(FrameId f) const {
    auto it = frame_keys_.find(f.index);
    return it == frame_keys_.end() ? 0 : static_cast<uint32_t>(it->second.size());
}

std::optional<DmaPerms> IommuModel::mapping_perms(DomainId domain, uint32_t io_page) const {
    auto it = mappings_.find(IoKey{domain, io_page});
    if (it == mappings_.end()) return std::nullopt;
    return it->second.perms;
}

std::optional<DmaPerms> IommuModel::cached_perms(DomainId domain, uint32_t io_page) const {
    auto it = tlb_.find(IoKey{domain, io_page});
    if (it == tlb_.end()) return std::nullopt;
    return it->second.perms;
}

}  // namespace ptmsim
