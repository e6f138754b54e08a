#include "ptmsim/metrics.hpp"

#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "ptmsim/step_meter.hpp"

namespace ptmsim {

const char* const kCsvHeader =
    "minute,flushes_pt,flushes_other,flushed_entries,iotlb_hits,iotlb_misses,"
    "miss_rate,dma_faults_blocked,alloc_cost_avg_l1,alloc_cost_avg_l2,"
    "alloc_cost_avg_l3,dealloc_cost_avg_l1,dealloc_cost_avg_l2,dealloc_cost_avg_l3,"
    "cache_l1,cache_l2,cache_l3,cache_bytes,fallbacks,processes_created,"
    "processes_exited";

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string to_csv(const std::vector<MetricsRow>& rows) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const MetricsRow& r : rows) {
        out += std::to_string(r.minute);
        out += ',';
        out += std::to_string(r.flushes_pt);
        out += ',';
        out += std::to_string(r.flushes_other);
        out += ',';
        out += std::to_string(r.flushed_entries);
        out += ',';
        out += std::to_string(r.iotlb_hits);
        out += ',';
        out += std::to_string(r.iotlb_misses);
        out += ',';
        out += fmt_double(r.miss_rate);
        out += ',';
        out += std::to_string(r.dma_faults_blocked);
        for (double v : r.alloc_cost_avg) {
            out += ',';
            out += fmt_double(v);
        }
        for (double v : r.dealloc_cost_avg) {
            out += ',';
            out += fmt_double(v);
        }
        out += ',';
        out += std::to_string(r.cache_l1);
        out += ',';
        out += std::to_string(r.cache_l2);
        out += ',';
        out += std::to_string(r.cache_l3);
        out += ',';
        out += std::to_string(r.cache_bytes);
        out += ',';
        out += std::to_string(r.fallbacks);
        out += ',';
        out += std::to_string(r.processes_created);
        out += ',';
        out += std::to_string(r.processes_exited);
        out += '\n';
    }
    return out;
}

std::string to_json(const RunSummary& s) {
    nlohmann::json j;
    j["scenario"] = s.scenario;
    j["seed"] = s.seed;
    j["minutes"] = s.minutes;
    j["warmup_minutes"] = s.warmup_minutes;

    nlohmann::json totals;
    totals["flushes_pt"] = s.flushes_pt_total;
    totals["flushes_other"] = s.flushes_other_total;
    totals["flushed_entries"] = s.flushed_entries_total;
    totals["iotlb_hits"] = s.iotlb_hits_total;
    totals["iotlb_misses"] = s.iotlb_misses_total;
    totals["dma_faults_blocked"] = s.dma_faults_blocked_total;
    totals["processes_created"] = s.processes_created_total;
    totals["processes_exited"] = s.processes_exited_total;
    totals["fallbacks"] = s.fallbacks_total;
    totals["pops"] = s.pops_total;
    totals["pushes"] = s.pushes_total;
    totals["step_cost"] = s.step_cost_total;
    nlohmann::json by_kind;
    for (size_t k = 0; k < kCostKindCount; ++k) {
        by_kind[to_string(static_cast<CostKind>(k))] = s.step_cost_by_kind[k];
    }
    totals["step_cost_by_kind"] = by_kind;
    j["totals"] = totals;

    nlohmann::json avg;
    avg["miss_rate"] = s.avg_miss_rate;
    avg["flushes_pt_per_minute"] = s.avg_flushes_pt;
    avg["alloc_cost_l1"] = s.avg_alloc_cost[0];
    avg["alloc_cost_l2"] = s.avg_alloc_cost[1];
    avg["alloc_cost_l3"] = s.avg_alloc_cost[2];
    avg["dealloc_cost_l1"] = s.avg_dealloc_cost[0];
    avg["dealloc_cost_l2"] = s.avg_dealloc_cost[1];
    avg["dealloc_cost_l3"] = s.avg_dealloc_cost[2];
    j["post_warmup_avg"] = avg;

    j["fallback_ratio"] = s.fallback_ratio;

    nlohmann::json sec;
    sec["dma_writes_to_protected"] = s.dma_writes_to_protected;
    sec["stale_hits"] = s.stale_hits;
    j["security"] = sec;

    return j.dump(2) + "\n";
}

Status write_outputs(const std::vector<MetricsRow>& rows, const RunSummary& summary,
                     const std::string& csv_path, const std::string& json_path) {
    {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) return Err::IoError;
        out << to_csv(rows);
        if (!out) return Err::IoError;
    }
    {
        std::ofstream out(json_path, std::ios::binary);
        if (!out) return Err::IoError;
        out << to_json(summary);
        if (!out) return Err::IoError;
    }
    return Status::ok_status();
}

}  // namespace ptmsim
