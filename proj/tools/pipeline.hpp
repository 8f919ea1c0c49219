#pragma once

#include <string>
#include <vector>

#include "scenario.hpp"

namespace dscat::cli {

inline constexpr const char* kToolkitVersion = "dscat 0.1.0";

struct RunResult {
    json report;
    json meta;  // timestamp and runtimes, kept out of the report for determinism
    int exit_code = 0;
};

// Runs every analysis of the scenario; failures are embedded per analysis.
// Exit code: 0 all succeeded, 3 any numerical failure, 2 otherwise.
RunResult run_scenario(const ScenarioConfig& cfg, unsigned seed, int threads);

// report.json, report.meta.json and the CSVs listed in cfg.csv, each written atomically.
std::vector<std::string> write_outputs(const ScenarioConfig& cfg, const RunResult& run, const std::string& out_dir);

// CSV files for one curve family of a report (decay, scan, wave, resonance, escape).
// errors: unknown selection → ValidationError; family absent or empty → ValidationError "no such curve".
std::vector<std::string> emit_curves(const json& report, const std::string& selection, const std::string& out_dir);

void write_atomic(const std::string& path, const std::string& content);

}  // namespace dscat::cli
