#pragma once

#include <array>
#include <cstdint>

namespace ptmsim {

/// Abstract cost categories. Every unit charged anywhere in the simulator
/// lands in exactly one of these.
enum class CostKind : uint8_t {
    ListOps = 0,
    Splits,
    Merges,
    SlabFront,
    Validation,
    Hypercall,
    IommuUpdate,
    FlushOp,
};

constexpr size_t kCostKindCount = 8;

const char* to_string(CostKind k);

/// Abstract step-cost accumulator, resettable per simulated minute.
class StepMeter {
public:
    void charge(CostKind kind, uint64_t units) {
        categories_[static_cast<size_t>(kind)] += units;
        total_ += units;
    }

    uint64_t total() const { return total_; }
    uint64_t category(CostKind kind) const {
        return categories_[static_cast<size_t>(kind)];
    }

    StepMeter snapshot() const { return *this; }

    void reset() {
        categories_.fill(0);
        total_ = 0;
    }

private:
    std::array<uint64_t, kCostKindCount> categories_{};
    uint64_t total_ = 0;
};

/// Unit costs for every metered step. All configurable; the defaults make
/// path-length comparisons deterministic.
struct CostModel {
    uint64_t list_op = 1;
    uint64_t split = 1;
    uint64_t merge = 1;
    uint64_t slab_front = 5;
    uint64_t validation_const = 2;   // fixed part of a content validation
    uint64_t per_entry = 1;          // per present entry examined
    uint64_t bookkeeping = 2;        // type/refcount checks of one transition
    uint64_t hypercall = 5;          // one guest->hypervisor crossing
    uint64_t iommu_update = 1;       // per mapping whose perms change
    uint64_t flush = 1;              // per flush invocation
    uint64_t cache_pop = 3;
    uint64_t cache_push = 3;
    uint64_t cache_probe = 1;        // empty-list probe on the fallback path
    uint64_t walk = 10;              // IOMMU page-table walk on IOTLB miss
};

}  // namespace ptmsim
