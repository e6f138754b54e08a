#include "ptmsim/type_guard.hpp"

#include <string>
#include <unordered_map>

namespace ptmsim {

namespace {

const std::set<std::pair<TypeState, TypeState>>& coarse_edges() {
    static const std::set<std::pair<TypeState, TypeState>> edges = [] {
        std::set<std::pair<TypeState, TypeState>> s;
        for (TypeState pt : {TypeState::PtL1, TypeState::PtL2, TypeState::PtL3}) {
            s.emplace(TypeState::Writable, pt);
            s.emplace(pt, TypeState::Writable);
        }
        s.emplace(TypeState::Writable, TypeState::Other);
        s.emplace(TypeState::Other, TypeState::Writable);
        return s;
    }();
    return edges;
}

const std::set<std::pair<TypeState, TypeState>>& fine_edges() {
    static const std::set<std::pair<TypeState, TypeState>> edges = [] {
        std::set<std::pair<TypeState, TypeState>> s;
        s.emplace(TypeState::Writable, TypeState::Semi);
        s.emplace(TypeState::Semi, TypeState::Writable);
        for (TypeState pt : {TypeState::PtL1, TypeState::PtL2, TypeState::PtL3}) {
            s.emplace(TypeState::Semi, pt);
            s.emplace(pt, TypeState::Semi);
        }
        s.emplace(TypeState::Writable, TypeState::Other);
        s.emplace(TypeState::Other, TypeState::Writable);
        return s;
    }();
    return edges;
}

}  // namespace

TypeGuard::TypeGuard(FrameTable& frames, IommuModel& iommu, StepMeter& meter,
                     const CostModel& costs, InvalidationScheme scheme)
    : frames_(frames), iommu_(iommu), meter_(meter), costs_(costs), scheme_(scheme) {}

std::set<std::pair<TypeState, TypeState>> TypeGuard::allowed_edges(ValidationMode mode) {
    return mode == ValidationMode::Coarse ? coarse_edges() : fine_edges();
}

bool TypeGuard::edge_allowed(ValidationMode mode, TypeState from, TypeState to) {
    const auto& edges = mode == ValidationMode::Coarse ? coarse_edges() : fine_edges();
    return edges.count({from, to}) != 0;
}

bool TypeGuard::crosses_dma_boundary(TypeState from, TypeState to) {
    auto accessible = [](TypeState s) { return s == TypeState::Writable; };
    return accessible(from) != accessible(to);
}

std::optional<TypeState> TypeGuard::state_of(FrameId f) const {
    TypeWordFields w = frames_.fields(f);
    return state_from(w.code, w.semi);
}

TransitionOutcome TypeGuard::reject(TransitionOutcome out, Err why) {
    out.accepted = false;
    out.reject_reason = why;
    out.dma_validation = false;
    out.iommu_updates = 0;
    out.flush_events = 0;
    stats_.rejected += 1;
    return out;
}

TypeGuard::ContentResult TypeGuard::run_validation(FrameId frame, PageLevel level) {
    ContentResult r;
    meter_.charge(CostKind::Validation, costs_.validation_const);
    r.cost += costs_.validation_const;

    const std::vector<PtEntry>* ents = frames_.entries(frame);
    if (ents == nullptr) {
        // A blank page has no present entries; vacuously valid.
        r.ok = true;
        return r;
    }
    if (frames_.entries_level(frame) != level ||
        ents->size() != frames_.entries_per_level(level)) {
        return r;  // staged for a different level
    }

    auto fail = [&](uint32_t idx) {
        rollback_increments(r.incremented);
        r.incremented.clear();
        r.failed_entry = idx;
        return r;
    };

    for (uint32_t idx = 0; idx < ents->size(); ++idx) {
        const PtEntry& e = (*ents)[idx];
        if (!e.present) continue;
        meter_.charge(CostKind::Validation, costs_.per_entry);
        r.cost += costs_.per_entry;
        if (!frames_.exists(e.target)) return fail(idx);

        if (level == PageLevel::L3) {
            // Only writable mappings are constrained (and refcounted): the
            // mapped data page must itself be software-writable.
            if (!e.writable) continue;
            TypeWordFields tw = frames_.fields(e.target);
            if (tw.code != PageTypeCode::Writable) return fail(idx);
            if (!frames_.try_get_ref(e.target, PageTypeCode::Writable).ok()) {
                return fail(idx);
            }
        } else {
            PageTypeCode child = level == PageLevel::L1 ? PageTypeCode::L2PageTable
                                                        : PageTypeCode::L3PageTable;
            TypeWordFields tw = frames_.fields(e.target);
            if (tw.code != child || !tw.validated) return fail(idx);
            if (!frames_.try_get_ref(e.target, child).ok()) return fail(idx);
        }
        r.incremented.push_back(e.target);
    }
    r.ok = true;
    return r;
}

void TypeGuard::rollback_increments(const std::vector<FrameId>& incremented) {
    for (auto it = incremented.rbegin(); it != incremented.rend(); ++it) {
        if (!frames_.put_ref(*it).ok()) {
            throw SimAbort("refcount underflow while rolling back validation");
        }
    }
}

TypeGuard::DevalResult TypeGuard::run_devalidation(FrameId frame, PageLevel level) {
    DevalResult r;
    meter_.charge(CostKind::Validation, costs_.validation_const);
    r.cost += costs_.validation_const;

    const std::vector<PtEntry>* ents = frames_.entries(frame);
    if (ents != nullptr) {
        for (const PtEntry& e : *ents) {
            if (!e.present) continue;
            meter_.charge(CostKind::Validation, costs_.per_entry);
            r.cost += costs_.per_entry;
            if (level == PageLevel::L3 && !e.writable) continue;
            if (!frames_.put_ref(e.target).ok()) {
                throw SimAbort("refcount underflow in devalidation of frame " +
                               std::to_string(frame.index));
            }
            r.decremented.push_back(e.target);
        }
        r.saved_entries = *ents;
        r.saved_level = frames_.entries_level(frame);
    }
    frames_.clear_entries(frame);
    return r;
}

void TypeGuard::dma_update(FrameId frame, TypeState target, TransitionOutcome& out,
                           std::vector<IoKey>* collect_keys) {
    stats_.dma_validations += 1;
    out.dma_validation = true;

    std::vector<IoKey> keys;
    uint32_t updated =
        iommu_.set_frame_dma_perms(frame, IommuModel::perms_for_state(target), &keys);
    meter_.charge(CostKind::IommuUpdate, updated * costs_.iommu_update);
    out.iommu_updates += updated;
    out.step_cost += updated * costs_.iommu_update;

    if (collect_keys) {
        collect_keys->insert(collect_keys->end(), keys.begin(), keys.end());
    } else {
        emit_flushes(frames_.domain(frame), keys, updated, out);
    }
}

void TypeGuard::emit_flushes(DomainId domain, const std::vector<IoKey>& keys,
                             uint32_t updated, TransitionOutcome& out) {
    // Permission updates must be followed by invalidation of any stale
    // IOTLB entries; nothing to invalidate when no mapping changed.
    if (updated == 0) return;
    uint32_t invocations = 0;
    switch (scheme_) {
    case InvalidationScheme::Global:
        (void)iommu_.flush(InvalidationScheme::Global);
        invocations = 1;
        break;
    case InvalidationScheme::DomainSelective:
        (void)iommu_.flush(InvalidationScheme::DomainSelective, domain);
        invocations = 1;
        break;
    case InvalidationScheme::PageSelective:
        for (const IoKey& k : keys) {
            (void)iommu_.flush(InvalidationScheme::PageSelective, k.domain, k.io_page);
            ++invocations;
        }
        break;
    }
    meter_.charge(CostKind::FlushOp, invocations * costs_.flush);
    out.flush_events += invocations;
    out.step_cost += invocations * costs_.flush;
    stats_.pt_flush_events += invocations;
}

TransitionOutcome TypeGuard::request_transition(FrameId frame, TypeState target) {
    TransitionOutcome out;
    meter_.charge(CostKind::Hypercall, costs_.hypercall);
    meter_.charge(CostKind::Validation, costs_.bookkeeping);
    out.step_cost += costs_.hypercall + costs_.bookkeeping;

    TypeWordFields w = frames_.fields(frame);
    auto src = state_from(w.code, w.semi);
    if (!src || *src == target || !edge_allowed(mode_, *src, target)) {
        return reject(out, Err::EdgeNotAllowed);
    }
    if (w.refcount != 0) return reject(out, Err::RefCountNonZero);

    if (auto target_level = level_of_state(target)) {
        ContentResult cr = run_validation(frame, *target_level);
        out.step_cost += cr.cost;
        if (!cr.ok) {
            out.failed_entry = cr.failed_entry;
            return reject(out, Err::ContentInvalid);
        }
        frames_.write_word(frame, code_of_state(target), true, false, 0);
    } else {
        if (auto src_level = level_of_state(*src); src_level && w.validated) {
            out.step_cost += run_devalidation(frame, *src_level).cost;
        }
        frames_.write_word(frame, code_of_state(target), false, state_is_semi(target), 0);
    }

    if (crosses_dma_boundary(*src, target)) {
        dma_update(frame, target, out, nullptr);
    }

    out.accepted = true;
    stats_.accepted += 1;
    if (mode_ == ValidationMode::FineGrained && *src == TypeState::Writable &&
        state_is_page_table(target)) {
        stats_.direct_w_to_pt_fine += 1;
    }
    return out;
}

TransitionOutcome TypeGuard::batch_transition(std::span<const FrameId> batch,
                                              TypeState target) {
    TransitionOutcome out;
    if (batch.empty()) {
        out.accepted = true;
        return out;
    }
    stats_.batches += 1;
    meter_.charge(CostKind::Hypercall, costs_.hypercall);
    out.step_cost += costs_.hypercall;

    auto first_state = state_of(batch.front());

    struct Undo {
        FrameId frame;
        uint32_t old_raw;
        std::vector<FrameId> incremented;
        std::vector<FrameId> decremented;
        std::optional<std::vector<PtEntry>> saved_entries;
        std::optional<PageLevel> saved_level;
    };
    std::vector<Undo> undos;
    undos.reserve(batch.size());

    auto rollback_all = [&] {
        for (auto it = undos.rbegin(); it != undos.rend(); ++it) {
            rollback_increments(it->incremented);
            for (FrameId d : it->decremented) {
                if (!frames_.try_get_ref(d, frames_.fields(d).code).ok()) {
                    throw SimAbort("batch rollback failed to restore refcount");
                }
            }
            if (it->saved_entries) {
                frames_.restore_entries(it->frame, it->saved_entries, it->saved_level);
            }
            frames_.write_raw(it->frame, it->old_raw);
        }
    };

    std::optional<TypeState> src;
    for (FrameId frame : batch) {
        meter_.charge(CostKind::Validation, costs_.bookkeeping);
        out.step_cost += costs_.bookkeeping;

        TypeWordFields w = frames_.fields(frame);
        auto st = state_from(w.code, w.semi);
        if (!st || !first_state || *st != *first_state) {
            rollback_all();
            return reject(out, Err::BadState);
        }
        src = st;
        if (*st == target || !edge_allowed(mode_, *st, target)) {
            rollback_all();
            return reject(out, Err::EdgeNotAllowed);
        }
        if (w.refcount != 0) {
            rollback_all();
            return reject(out, Err::RefCountNonZero);
        }

        Undo u;
        u.frame = frame;
        u.old_raw = frames_.raw_word(frame);

        if (auto target_level = level_of_state(target)) {
            ContentResult cr = run_validation(frame, *target_level);
            out.step_cost += cr.cost;
            if (!cr.ok) {
                rollback_all();
                out.failed_entry = cr.failed_entry;
                return reject(out, Err::ContentInvalid);
            }
            u.incremented = std::move(cr.incremented);
            frames_.write_word(frame, code_of_state(target), true, false, 0);
        } else {
            if (auto src_level = level_of_state(*st); src_level && w.validated) {
                DevalResult dr = run_devalidation(frame, *src_level);
                out.step_cost += dr.cost;
                u.decremented = std::move(dr.decremented);
                u.saved_entries = std::move(dr.saved_entries);
                u.saved_level = dr.saved_level;
            }
            frames_.write_word(frame, code_of_state(target), false,
                               state_is_semi(target), 0);
        }
        undos.push_back(std::move(u));
    }

    // Coalesced DMA validation: per-frame permission updates, then one
    // flush batch.
    if (src && crosses_dma_boundary(*src, target)) {
        std::vector<IoKey> keys;
        uint32_t updated_total = 0;
        for (FrameId frame : batch) {
            TransitionOutcome tmp;
            dma_update(frame, target, tmp, &keys);
            out.iommu_updates += tmp.iommu_updates;
            out.step_cost += tmp.step_cost;
            updated_total += tmp.iommu_updates;
        }
        out.dma_validation = true;
        emit_flushes(frames_.domain(batch.front()), keys, updated_total, out);
    }

    out.accepted = true;
    stats_.accepted += batch.size();
    return out;
}

TransitionOutcome TypeGuard::validate_page_table(FrameId frame, PageLevel level) {
    TransitionOutcome out;
    TypeWordFields w = frames_.fields(frame);
    if (w.code != PageTypeCode::Writable) return reject(out, Err::BadState);
    if (w.refcount != 0) return reject(out, Err::RefCountNonZero);

    ContentResult cr = run_validation(frame, level);
    out.step_cost += cr.cost;
    if (!cr.ok) {
        out.failed_entry = cr.failed_entry;
        return reject(out, Err::ContentInvalid);
    }
    frames_.write_word(frame, page_table_code(level), true, false, 0);
    out.accepted = true;
    return out;
}

TransitionOutcome TypeGuard::devalidate_page_table(FrameId frame, PageLevel level) {
    TransitionOutcome out;
    TypeWordFields w = frames_.fields(frame);
    if (w.code != page_table_code(level) || !w.validated) {
        return reject(out, Err::BadState);
    }
    if (w.refcount != 0) return reject(out, Err::StillReferenced);

    out.step_cost += run_devalidation(frame, level).cost;
    frames_.write_word(frame, page_table_code(level), false, false, 0);
    out.accepted = true;
    return out;
}

}  // namespace ptmsim
