#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "ptmsim/frame_table.hpp"
#include "ptmsim/types.hpp"

namespace ptmsim {

struct DmaPerms {
    bool read = false;
    bool write = false;

    constexpr auto operator<=>(const DmaPerms&) const = default;
};

constexpr DmaPerms kDmaNone{false, false};
constexpr DmaPerms kDmaReadWrite{true, true};

/// Key of one IOMMU page-table slot.
struct IoKey {
    DomainId domain = 0;
    uint32_t io_page = 0;

    constexpr auto operator<=>(const IoKey&) const = default;
};

struct IoKeyHash {
    size_t operator()(const IoKey& k) const noexcept {
        return std::hash<uint64_t>{}((uint64_t(k.domain) << 32) | k.io_page);
    }
};

struct IotlbStats {
    uint64_t hits = 0;
    uint64_t misses = 0;
    uint64_t flushes_total = 0;
    uint64_t flushed_entries = 0;
    uint64_t insertions = 0;
    uint64_t dma_blocked = 0;
    /// Successful DMA writes that landed on a frame currently in a
    /// semi-writable, page-table, or other non-writable state. Must stay
    /// zero whenever the update-then-flush protocol is followed.
    uint64_t writes_to_protected = 0;
    /// IOTLB hits whose cached perms differed from the live mapping.
    uint64_t stale_hits = 0;
    uint64_t walk_cost_total = 0;
};

struct IommuConfig {
    uint32_t iotlb_capacity = 64;
    uint64_t walk_cost = 10;
    uint32_t domain_count = 1;
};

/// IOMMU page table, per-type DMA permissions, and an LRU IOTLB with the
/// three invalidation granularities.
class IommuModel {
public:
    IommuModel(FrameTable& frames, IommuConfig cfg);

    /// DMA permission policy per transition-graph node: writable pages get
    /// full access, everything else none.
    static DmaPerms perms_for_state(TypeState s);
    /// Same policy applied to a frame's current word; free (Untracked)
    /// frames count as plain guest memory and stay fully accessible.
    DmaPerms perms_for_frame(FrameId f) const;

    Status map_io(DomainId domain, uint32_t io_page, FrameId frame);

    /// Replaces the perms of every mapping that targets `frame`. Does not
    /// flush; callers follow up with the flush the protocol requires.
    uint32_t set_frame_dma_perms(FrameId frame, DmaPerms perms,
                                 std::vector<IoKey>* updated_keys = nullptr);

    /// Returns the number of IOTLB entries invalidated.
    Result<uint32_t> flush(InvalidationScheme scheme,
                           std::optional<DomainId> domain = std::nullopt,
                           std::optional<uint32_t> io_page = std::nullopt);

    Result<FrameId> translate(DomainId domain, uint32_t io_page, bool is_write);

    const IotlbStats& stats() const { return stats_; }
    uint32_t capacity() const { return cfg_.iotlb_capacity; }
    size_t cached_entries() const { return tlb_.size(); }
    uint32_t domain_count() const { return cfg_.domain_count; }
    size_t mapping_count() const { return mappings_.size(); }
    uint32_t mappings_of_frame(FrameId f) const;

    std::optional<DmaPerms> mapping_perms(DomainId domain, uint32_t io_page) const;
    std::optional<DmaPerms> cached_perms(DomainId domain, uint32_t io_page) const;

private:
    struct Mapping {
        FrameId frame;
        DmaPerms perms;
    };
    struct TlbEntry {
        FrameId frame;
        DmaPerms perms;
        uint64_t stamp = 0;
    };

    void insert_tlb(const IoKey& key, const Mapping& m);

    FrameTable& frames_;
    IommuConfig cfg_;
    std::unordered_map<IoKey, Mapping, IoKeyHash> mappings_;
    std::unordered_map<uint32_t, std::vector<IoKey>> frame_keys_;  // reverse index
    std::unordered_map<IoKey, TlbEntry, IoKeyHash> tlb_;
    uint64_t stamp_counter_ = 0;
    IotlbStats stats_;
};

}  // namespace ptmsim
