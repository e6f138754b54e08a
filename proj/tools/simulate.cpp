#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "ptmsim/simulator.hpp"

using namespace ptmsim;

int main(int argc, char** argv) {
    CLI::App app{"Paravirtual page-table management simulator"};

    std::string scenario;
    std::string config_path;
    std::string out_csv;
    std::string out_summary;
    int64_t minutes = -1;
    int64_t seed = -1;

    app.add_option("--scenario", scenario, "baseline|pre|dyn");
    app.add_option("--minutes", minutes, "simulated minutes");
    app.add_option("--seed", seed, "workload seed");
    app.add_option("--config", config_path, "config file (key = value lines)");
    app.add_option("--out", out_csv, "per-minute metrics CSV path");
    app.add_option("--summary", out_summary, "run summary JSON path");

    CLI11_PARSE(app, argc, argv);

    RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = load_config_file(config_path);
        if (!scenario.empty()) {
            if (scenario == "baseline") cfg.scenario = Scenario::Baseline;
            else if (scenario == "pre") cfg.scenario = Scenario::PreEnabled;
            else if (scenario == "dyn") cfg.scenario = Scenario::DynEnabled;
            else {
                std::fprintf(stderr, "error: unknown scenario '%s'\n", scenario.c_str());
                return 1;
            }
        }
        if (minutes >= 0) cfg.minutes = static_cast<uint32_t>(minutes);
        if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
        if (!out_csv.empty()) cfg.out_csv = out_csv;
        if (!out_summary.empty()) cfg.out_summary = out_summary;
        if (cfg.minutes == 0) {
            std::fprintf(stderr, "error: minutes must be >= 1\n");
            return 1;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }

    try {
        Simulator sim(cfg);
        RunResult result = sim.run();

        if (!cfg.out_csv.empty() || !cfg.out_summary.empty()) {
            std::string csv = cfg.out_csv.empty() ? "metrics.csv" : cfg.out_csv;
            std::string js = cfg.out_summary.empty() ? "summary.json" : cfg.out_summary;
            Status st = write_outputs(result.rows, result.summary, csv, js);
            if (!st.ok()) {
                std::fprintf(stderr, "error: failed to write outputs\n");
                return 1;
            }
            std::printf("wrote %s and %s\n", csv.c_str(), js.c_str());
        } else {
            std::fputs(to_csv(result.rows).c_str(), stdout);
        }

        const RunSummary& s = result.summary;
        std::printf("scenario=%s minutes=%u seed=%llu\n", s.scenario.c_str(), s.minutes,
                    static_cast<unsigned long long>(s.seed));
        std::printf("flushes_pt=%llu fallbacks=%llu created=%llu exited=%llu\n",
                    static_cast<unsigned long long>(s.flushes_pt_total),
                    static_cast<unsigned long long>(s.fallbacks_total),
                    static_cast<unsigned long long>(s.processes_created_total),
                    static_cast<unsigned long long>(s.processes_exited_total));
        return 0;
    } catch (const SimAbort& e) {
        std::fprintf(stderr, "invariant violation: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
