#pragma once

#include <array>
#include <string>
#include <vector>

#include "ptmsim/config.hpp"
#include "ptmsim/types.hpp"

namespace ptmsim {

/// One simulated minute of counters. Column order of the CSV output
/// follows the field order here.
struct MetricsRow {
    uint32_t minute = 0;
    uint64_t flushes_pt = 0;
    uint64_t flushes_other = 0;
    uint64_t flushed_entries = 0;
    uint64_t iotlb_hits = 0;
    uint64_t iotlb_misses = 0;
    double miss_rate = 0.0;
    uint64_t dma_faults_blocked = 0;
    std::array<double, 3> alloc_cost_avg{};    // L1, L2, L3
    std::array<double, 3> dealloc_cost_avg{};  // L1, L2, L3
    uint32_t cache_l1 = 0;
    uint32_t cache_l2 = 0;
    uint32_t cache_l3 = 0;
    uint64_t cache_bytes = 0;
    uint64_t fallbacks = 0;
    uint32_t processes_created = 0;
    uint32_t processes_exited = 0;
};

struct RunSummary {
    std::string scenario;
    uint64_t seed = 0;
    uint32_t minutes = 0;
    uint32_t warmup_minutes = 2;

    uint64_t flushes_pt_total = 0;
    uint64_t flushes_other_total = 0;
    uint64_t flushed_entries_total = 0;
    uint64_t iotlb_hits_total = 0;
    uint64_t iotlb_misses_total = 0;
    uint64_t dma_faults_blocked_total = 0;
    uint64_t processes_created_total = 0;
    uint64_t processes_exited_total = 0;
    uint64_t fallbacks_total = 0;
    uint64_t pops_total = 0;
    uint64_t pushes_total = 0;
    uint64_t step_cost_total = 0;
    std::array<uint64_t, 8> step_cost_by_kind{};

    // Averages over minutes >= warmup_minutes.
    double avg_miss_rate = 0.0;
    double avg_flushes_pt = 0.0;
    std::array<double, 3> avg_alloc_cost{};
    std::array<double, 3> avg_dealloc_cost{};

    double fallback_ratio = 0.0;  // fallbacks / pops

    uint64_t dma_writes_to_protected = 0;
    uint64_t stale_hits = 0;
};

extern const char* const kCsvHeader;

std::string to_csv(const std::vector<MetricsRow>& rows);
std::string to_json(const RunSummary& summary);

/// Writes the CSV rows and the JSON summary. Byte-stable for a fixed
/// seed and config.
Status write_outputs(const std::vector<MetricsRow>& rows, const RunSummary& summary,
                     const std::string& csv_path, const std::string& json_path);

}  // namespace ptmsim
