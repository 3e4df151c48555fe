#pragma once

// Orchestrates estimator runs for every (sweep point, line, threshold) of a
// scenario and writes the summary and trace files.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "linetherm/engine.hpp"
#include "linetherm/report.hpp"
#include "linetherm/scenario.hpp"

namespace linetherm::cli {

/// Command-line values that replace the scenario's run settings.
struct RunOverrides {
    std::optional<EstimatorMode> mode;
    std::optional<double> epsilon;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::int64_t> max_trials;
};

/// Returns `s` with the overrides applied. Throws ValidationError.
Scenario apply_overrides(Scenario s, const RunOverrides& o);

struct RunArtifacts {
    std::vector<SummaryRow> rows;
    std::vector<engine::EstimationResult> results;
    std::filesystem::path summary_path;
    std::filesystem::path trace_path;
    bool all_met = true;  ///< every estimate reached epsilon
};

/// Runs the selected estimator per (sweep point, line, threshold). Rows are
/// appended to `<out_dir>/summary.tsv` as they finish; per-row engine errors
/// become rows with an error status. `log` (optional) receives progress lines.
RunArtifacts run(const Scenario& s, const std::filesystem::path& out_dir, std::ostream* log = nullptr);

struct PilotArtifacts {
    std::vector<std::string> lines;  ///< tab-separated: variant, line, target K, m, ladder
    std::filesystem::path ladder_path;
};

/// Runs only the pilot stage and writes `<out_dir>/ladders.tsv`.
PilotArtifacts pilot(const Scenario& s, const std::filesystem::path& out_dir, std::ostream* log = nullptr);

engine::EstimatorOptions estimator_options(const Scenario& s);
engine::PilotOptions pilot_options(const Scenario& s);

}  // namespace linetherm::cli
