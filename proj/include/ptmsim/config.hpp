#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ptmsim/frame_table.hpp"
#include "ptmsim/iommu.hpp"
#include "ptmsim/step_meter.hpp"
#include "ptmsim/workload.hpp"

namespace ptmsim {

enum class Scenario : uint8_t { Baseline, PreEnabled, DynEnabled };

/// Full run configuration. Defaults reproduce the standard 30-minute
/// desk-scale experiment.
struct RunConfig {
    Scenario scenario = Scenario::Baseline;
    uint32_t enable_at_minute = 5;  // DynEnabled only
    uint32_t minutes = 30;
    uint64_t seed = 1;

    uint32_t pool_frames = 4096;
    uint32_t max_order = 10;
    EntriesPerLevel entries;

    IommuConfig iommu;
    InvalidationScheme scheme = InvalidationScheme::PageSelective;

    CostModel costs;

    std::array<uint32_t, 3> cache_initial = {8, 32, 160};
    std::optional<uint32_t> threshold_count;
    std::optional<double> threshold_proportion;

    WorkloadConfig workload;
    uint32_t data_pool_pages = 256;

    std::vector<ScriptedControl> events;

    std::string out_csv;
    std::string out_summary;
};

/// Raised on malformed or inconsistent configuration text.
struct ConfigError : std::runtime_error {
    ConfigError(int line_no, const std::string& reason)
        : std::runtime_error("config line " + std::to_string(line_no) + ": " + reason),
          line(line_no) {}
    int line;
};

/// Parses the line-oriented `key = value` format (# starts a comment).
/// Unknown keys are rejected; missing keys keep their defaults.
RunConfig parse_config(std::string_view text);

RunConfig load_config_file(const std::string& path);

const char* to_string(Scenario s);

}  // namespace ptmsim
