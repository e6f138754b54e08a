#pragma once

#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "ptmsim/frame_table.hpp"
#include "ptmsim/iommu.hpp"
#include "ptmsim/step_meter.hpp"
#include "ptmsim/types.hpp"

namespace ptmsim {

/// Result of one guard operation. A rejected operation leaves every frame
/// bit-identical to before the call; step_cost still reports the work the
/// checks performed.
struct TransitionOutcome {
    bool accepted = false;
    std::optional<Err> reject_reason;
    bool dma_validation = false;
    uint32_t iommu_updates = 0;
    uint32_t flush_events = 0;
    uint64_t step_cost = 0;
    std::optional<uint32_t> failed_entry;  // set on ContentInvalid
};

/// Hypervisor-side validation engine. Enforces the page-type transition
/// state machine in coarse or fine-grained mode, performs page-table
/// content (de)validation, and issues the IOMMU permission updates and
/// IOTLB flushes that DMA validation requires.
class TypeGuard {
public:
    struct Stats {
        uint64_t accepted = 0;
        uint64_t rejected = 0;
        uint64_t batches = 0;
        uint64_t dma_validations = 0;
        /// Flush invocations emitted by the guard (the page-table-related
        /// flush source).
        uint64_t pt_flush_events = 0;
        /// Accepted direct Writable -> page-table rewrites while in
        /// fine-grained mode. The edge policy keeps this at zero.
        uint64_t direct_w_to_pt_fine = 0;
    };

    TypeGuard(FrameTable& frames, IommuModel& iommu, StepMeter& meter,
              const CostModel& costs, InvalidationScheme scheme);

    ValidationMode mode() const { return mode_; }
    void set_mode(ValidationMode m) { mode_ = m; }
    InvalidationScheme scheme() const { return scheme_; }

    /// The legal transition edges of the given mode.
    static std::set<std::pair<TypeState, TypeState>> allowed_edges(ValidationMode mode);
    static bool edge_allowed(ValidationMode mode, TypeState from, TypeState to);
    /// True when the two states differ in DMA accessibility; exactly these
    /// edges require DMA validation.
    static bool crosses_dma_boundary(TypeState from, TypeState to);

    /// Current transition-graph node of a frame, if it has one.
    std::optional<TypeState> state_of(FrameId f) const;

    TransitionOutcome request_transition(FrameId frame, TypeState target);

    /// Per-frame semantics of request_transition with coalesced DMA side
    /// effects: one hypercall, one flush batch. All-or-nothing.
    TransitionOutcome batch_transition(std::span<const FrameId> frames, TypeState target);

    /// Validates staged contents against the type policy and promotes the
    /// frame to the validated page-table type of `level`.
    TransitionOutcome validate_page_table(FrameId frame, PageLevel level);

    /// Reverse of validation: drops every reference the validation took,
    /// clears the entry array and the validated flag.
    TransitionOutcome devalidate_page_table(FrameId frame, PageLevel level);

    const Stats& stats() const { return stats_; }

private:
    struct ContentResult {
        bool ok = false;
        uint64_t cost = 0;
        std::optional<uint32_t> failed_entry;
        std::vector<FrameId> incremented;
    };
    struct DevalResult {
        uint64_t cost = 0;
        std::vector<FrameId> decremented;
        std::optional<std::vector<PtEntry>> saved_entries;
        std::optional<PageLevel> saved_level;
    };

    /// Walks the staged entries, incrementing child refcounts. Rolls its
    /// own increments back on failure. Does not touch the frame's word.
    ContentResult run_validation(FrameId frame, PageLevel level);
    /// Mirror of run_validation; clears the entry array. Refcount underflow
    /// here means corrupt state and aborts the run.
    DevalResult run_devalidation(FrameId frame, PageLevel level);

    void rollback_increments(const std::vector<FrameId>& incremented);

    /// IOMMU permission update for one frame; flushes are deferred when
    /// `collect_keys` is given (batch coalescing).
    void dma_update(FrameId frame, TypeState target, TransitionOutcome& out,
                    std::vector<IoKey>* collect_keys);
    void emit_flushes(DomainId domain, const std::vector<IoKey>& keys,
                      uint32_t updated, TransitionOutcome& out);

    TransitionOutcome reject(TransitionOutcome out, Err why);

    FrameTable& frames_;
    IommuModel& iommu_;
    StepMeter& meter_;
    const CostModel& costs_;
    InvalidationScheme scheme_;
    ValidationMode mode_ = ValidationMode::Coarse;
    Stats stats_;
};

}  // namespace ptmsim
