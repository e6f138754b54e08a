#include "ptmsim/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ptmsim {

const char* to_string(Scenario s) {
    switch (s) {
    case Scenario::Baseline: return "baseline";
    case Scenario::PreEnabled: return "pre";
    case Scenario::DynEnabled: return "dyn";
    }
    return "unknown";
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

int64_t parse_int(std::string_view v, int line) {
    int64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ConfigError(line, "expected an integer, got '" + std::string(v) + "'");
    }
    return out;
}

uint64_t parse_uint(std::string_view v, int line) {
    int64_t out = parse_int(v, line);
    if (out < 0) throw ConfigError(line, "value must be non-negative");
    return static_cast<uint64_t>(out);
}

double parse_double(std::string_view v, int line) {
    try {
        size_t pos = 0;
        double out = std::stod(std::string(v), &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::exception&) {
        throw ConfigError(line, "expected a number, got '" + std::string(v) + "'");
    }
}

ScriptedControl parse_event(std::string_view v, int line) {
    std::istringstream is{std::string(v)};
    ScriptedControl c;
    std::string action;
    int64_t minute = -1;
    if (!(is >> minute >> action) || minute < 0) {
        throw ConfigError(line, "event format: <minute> <action> [args]");
    }
    c.minute = static_cast<uint32_t>(minute);
    if (action == "enable") {
        c.action = ControlAction::EnableCache;
    } else if (action == "disable") {
        c.action = ControlAction::DisableCache;
    } else if (action == "shrink_count") {
        c.action = ControlAction::ShrinkCount;
        int64_t n;
        if (!(is >> n) || n < 0) throw ConfigError(line, "shrink_count needs a count");
        c.count = static_cast<uint32_t>(n);
    } else if (action == "shrink_percent") {
        c.action = ControlAction::ShrinkPercent;
        double p;
        if (!(is >> p) || p < 0.0 || p > 100.0) {
            throw ConfigError(line, "shrink_percent needs a percentage in [0,100]");
        }
        c.ratio = p / 100.0;
    } else if (action == "set_threshold") {
        c.action = ControlAction::SetThreshold;
        std::string tok;
        if (is >> tok && tok != "-") c.count = static_cast<uint32_t>(parse_uint(tok, line));
        if (is >> tok && tok != "-") c.ratio = parse_double(tok, line);
    } else {
        throw ConfigError(line, "unknown event action '" + action + "'");
    }
    return c;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
    RunConfig cfg;
    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string_view line = eol == std::string_view::npos
                                    ? text.substr(pos)
                                    : text.substr(pos, eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (size_t hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;

        size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(line_no, "expected 'key = value'");
        }
        std::string key{trim(line.substr(0, eq))};
        std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(line_no, "missing key");
        if (value.empty()) throw ConfigError(line_no, "missing value for '" + key + "'");

        auto as_u32 = [&] { return static_cast<uint32_t>(parse_uint(value, line_no)); };
        auto as_u64 = [&] { return parse_uint(value, line_no); };
        auto as_f = [&] { return parse_double(value, line_no); };

        if (key == "scenario") {
            if (value == "baseline") cfg.scenario = Scenario::Baseline;
            else if (value == "pre") cfg.scenario = Scenario::PreEnabled;
            else if (value == "dyn") cfg.scenario = Scenario::DynEnabled;
            else throw ConfigError(line_no, "scenario must be baseline|pre|dyn");
        } else if (key == "enable_at") {
            cfg.enable_at_minute = as_u32();
        } else if (key == "minutes") {
            cfg.minutes = as_u32();
            if (cfg.minutes == 0) throw ConfigError(line_no, "minutes must be >= 1");
        } else if (key == "seed") {
            cfg.seed = as_u64();
        } else if (key == "pool_frames") {
            cfg.pool_frames = as_u32();
            if (cfg.pool_frames == 0) throw ConfigError(line_no, "pool_frames must be >= 1");
        } else if (key == "max_order") {
            cfg.max_order = as_u32();
            if (cfg.max_order > 20) throw ConfigError(line_no, "max_order too large");
        } else if (key == "entries_l1") {
            cfg.entries.l1 = as_u32();
        } else if (key == "entries_l2") {
            cfg.entries.l2 = as_u32();
        } else if (key == "entries_l3") {
            cfg.entries.l3 = as_u32();
        } else if (key == "iotlb_capacity") {
            int64_t v = parse_int(value, line_no);
            if (v < 1) throw ConfigError(line_no, "iotlb_capacity must be >= 1");
            cfg.iommu.iotlb_capacity = static_cast<uint32_t>(v);
        } else if (key == "walk_cost") {
            cfg.iommu.walk_cost = as_u64();
            cfg.costs.walk = cfg.iommu.walk_cost;
        } else if (key == "domains") {
            cfg.iommu.domain_count = as_u32();
            if (cfg.iommu.domain_count == 0) throw ConfigError(line_no, "domains must be >= 1");
        } else if (key == "invalidation") {
            if (value == "global") cfg.scheme = InvalidationScheme::Global;
            else if (value == "domain") cfg.scheme = InvalidationScheme::DomainSelective;
            else if (value == "page") cfg.scheme = InvalidationScheme::PageSelective;
            else throw ConfigError(line_no, "invalidation must be global|domain|page");
        } else if (key == "slab_front_cost") {
            cfg.costs.slab_front = as_u64();
        } else if (key == "hypercall_cost") {
            cfg.costs.hypercall = as_u64();
        } else if (key == "validation_cost") {
            cfg.costs.validation_const = as_u64();
        } else if (key == "per_entry_cost") {
            cfg.costs.per_entry = as_u64();
        } else if (key == "bookkeeping_cost") {
            cfg.costs.bookkeeping = as_u64();
        } else if (key == "pop_cost") {
            cfg.costs.cache_pop = as_u64();
        } else if (key == "push_cost") {
            cfg.costs.cache_push = as_u64();
        } else if (key == "cache_l1") {
            cfg.cache_initial[0] = as_u32();
        } else if (key == "cache_l2") {
            cfg.cache_initial[1] = as_u32();
        } else if (key == "cache_l3") {
            cfg.cache_initial[2] = as_u32();
        } else if (key == "threshold_count") {
            cfg.threshold_count = as_u32();
        } else if (key == "threshold_proportion") {
            double p = as_f();
            if (p <= 0.0 || p > 1.0) {
                throw ConfigError(line_no, "threshold_proportion must be in (0,1]");
            }
            cfg.threshold_proportion = p;
        } else if (key == "procs_per_minute") {
            cfg.workload.procs_per_minute = as_u32();
        } else if (key == "shape_l2") {
            cfg.workload.shape.l2_pages = as_u32();
        } else if (key == "shape_l3") {
            cfg.workload.shape.l3_pages = as_u32();
        } else if (key == "lifetime") {
            if (value == "fixed") cfg.workload.lifetime.kind = LifetimeModel::Kind::Fixed;
            else if (value == "exp") cfg.workload.lifetime.kind = LifetimeModel::Kind::Exponential;
            else throw ConfigError(line_no, "lifetime must be fixed|exp");
        } else if (key == "lifetime_ms") {
            cfg.workload.lifetime.fixed_ms = as_u64();
            if (cfg.workload.lifetime.fixed_ms == 0) {
                throw ConfigError(line_no, "lifetime_ms must be >= 1");
            }
        } else if (key == "lifetime_mean_ms") {
            cfg.workload.lifetime.mean_ms = as_f();
            if (cfg.workload.lifetime.mean_ms <= 0) {
                throw ConfigError(line_no, "lifetime_mean_ms must be positive");
            }
        } else if (key == "lifetime_cap_ms") {
            cfg.workload.lifetime.cap_ms = as_u64();
        } else if (key == "schedule") {
            if (value == "grid") cfg.workload.schedule = WorkloadConfig::Schedule::Grid;
            else if (value == "uniform") cfg.workload.schedule = WorkloadConfig::Schedule::UniformRandom;
            else throw ConfigError(line_no, "schedule must be grid|uniform");
        } else if (key == "dma_per_minute") {
            cfg.workload.dma.per_minute = as_u32();
        } else if (key == "dma_working_set") {
            cfg.workload.dma.working_set = as_u32();
            if (cfg.workload.dma.working_set == 0) {
                throw ConfigError(line_no, "dma_working_set must be >= 1");
            }
        } else if (key == "dma_write_fraction") {
            double f = as_f();
            if (f < 0.0 || f > 1.0) {
                throw ConfigError(line_no, "dma_write_fraction must be in [0,1]");
            }
            cfg.workload.dma.write_fraction = f;
        } else if (key == "dma_distribution") {
            if (value == "uniform") cfg.workload.dma.dist = DmaProfile::AddrDist::Uniform;
            else if (value == "zipf") cfg.workload.dma.dist = DmaProfile::AddrDist::Zipf;
            else throw ConfigError(line_no, "dma_distribution must be uniform|zipf");
        } else if (key == "zipf_s") {
            cfg.workload.dma.zipf_s = as_f();
        } else if (key == "data_pool_pages") {
            cfg.data_pool_pages = as_u32();
        } else if (key == "data_entries_per_l3") {
            cfg.workload.data_entries_per_l3 = as_u32();
        } else if (key == "event") {
            cfg.events.push_back(parse_event(value, line_no));
        } else if (key == "out") {
            cfg.out_csv = std::string(value);
        } else if (key == "summary") {
            cfg.out_summary = std::string(value);
        } else {
            throw ConfigError(line_no, "unknown key '" + key + "'");
        }
    }

    if (cfg.workload.shape.l2_pages < 1 ||
        cfg.workload.shape.l3_pages < cfg.workload.shape.l2_pages) {
        throw ConfigError(0, "shape must satisfy shape_l3 >= shape_l2 >= 1");
    }
    if (cfg.workload.shape.l2_pages > cfg.entries.l1) {
        throw ConfigError(0, "shape_l2 exceeds entries_l1");
    }
    if (cfg.workload.dma.working_set > cfg.pool_frames) {
        throw ConfigError(0, "dma_working_set exceeds pool_frames");
    }
    if (cfg.workload.data_entries_per_l3 > cfg.entries.l3) {
        throw ConfigError(0, "data_entries_per_l3 exceeds entries_l3");
    }
    if (cfg.workload.data_entries_per_l3 > 0 && cfg.data_pool_pages == 0) {
        throw ConfigError(0, "data_pool_pages must be >= 1 when bottom-level entries are mapped");
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace ptmsim
