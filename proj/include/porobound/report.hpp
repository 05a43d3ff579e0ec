#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "microstructure.hpp"

namespace porobound {

inline constexpr const char *kReportSchema = "porobound.report/1";

enum ExitCode : int { exit_ok = 0, exit_input_error = 2, exit_numerical_failure = 3 };

struct RunConfig {
    std::string command;               // validate | stats | bounds
    std::filesystem::path input_path;
    std::string bc_family = "both";    // displacement-pressure | traction-fluid-content | both
    double solver_tol = 1e-10;
    double max_iter_factor = 50;
    std::vector<Shift> shifts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    int subdivisions = 2;
    std::optional<std::filesystem::path> output_path;
    unsigned threads = 0;              // 0 = implementation default
    bool timings = false;              // adds wall-clock times to the report
};

struct RunOutcome {
    int exit_code = exit_ok;
    std::string report;                // empty when nothing could be produced
    std::vector<std::string> messages; // human-readable, for standard error
};

// Executes one command. Never throws for input or numerical problems; those
// map onto exit codes and messages, with whatever partial report exists.
RunOutcome run(const RunConfig &config);

// "x,y,z;x,y,z;..." -> shifts. Throws InputError.
std::vector<Shift> parse_shifts(const std::string &text);

// POROBOUND_THREADS, or 0 when unset/empty.
unsigned threads_from_environment();

// Pretty JSON with every floating-point value printed at 17 significant
// digits; non-finite values become null.
std::string format_report(const nlohmann::ordered_json &doc);

std::string sha256_hex(const std::string &bytes);

} // namespace porobound
