#pragma once

// Machine-readable outputs (tab-separated summary, NDJSON trace) and
// human-readable renderings.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "linetherm/engine.hpp"
#include "linetherm/scenario.hpp"

namespace linetherm::cli {

struct SummaryRow {
    std::string line;
    double threshold = 0.0;  ///< K
    std::string mode;
    double gamma_hat = 0.0;
    double relative_error = 0.0;
    std::int64_t trials = 0;
    std::int64_t hits = 0;
    std::int64_t aborted = 0;
    std::uint64_t seed = 0;
    double wall_s = 0.0;
    std::string digest;
    std::string variant;  ///< sweep point label, "-" if none
    std::string status;
    std::int64_t work_steps = 0;
    std::string ladder;   ///< thresholds K and retrial counts, e.g. "340.1:1,352.7:7,373.15:3"
};

std::string summary_header();
std::string format_summary_row(const SummaryRow& row);
/// Columns that do not depend on wall time, for determinism checks.
std::string format_summary_row_stable(const SummaryRow& row);

std::string format_ladder(const engine::ThresholdLadder& ladder);

SummaryRow make_row(const Scenario& s, const std::string& digest, const std::string& variant,
                    std::size_t line, double threshold, const engine::EstimationResult& r);

/// One NDJSON object per trace point.
void write_trace(std::ostream& out, const SummaryRow& row, const std::vector<engine::TracePoint>& trace);

/// Human-readable initial operating point, temperatures in deg C.
std::string render_initial_report(const InitialReport& report);

/// Human-readable summary table, temperatures in deg C.
std::string render_summary(const std::vector<SummaryRow>& rows);

}  // namespace linetherm::cli
