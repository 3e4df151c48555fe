#pragma once

// Scenario configuration: JSON ingestion, validation, canonical serialization
// and parameter sweeps.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "linetherm/engine.hpp"

namespace linetherm::cli {

enum class EstimatorMode { crude, restart, steady_state };

std::string to_string(EstimatorMode mode);
EstimatorMode parse_mode(const std::string& text);

struct MonitorSpec {
    std::size_t line = 0;            ///< branch index
    std::vector<double> thresholds;  ///< K, ascending

    bool operator==(const MonitorSpec&) const = default;
};

struct RunSettings {
    EstimatorMode mode = EstimatorMode::restart;
    double epsilon = 0.05;
    std::uint64_t seed = 1;
    int threads = 1;
    std::int64_t max_trials = 10'000'000;
    double max_wall_s = std::numeric_limits<double>::infinity();
    std::int64_t pilot_trials = 1000;
    std::uint64_t pilot_seed = 0x5eed;

    bool operator==(const RunSettings&) const = default;
};

/// Cartesian sweep of one cluster group's transition frequency and cluster size.
struct SweepSpec {
    std::size_t group = 0;
    std::vector<double> frequencies;  ///< 1/s
    std::vector<int> cluster_sizes;

    bool operator==(const SweepSpec&) const = default;
};

struct Scenario {
    std::string name;
    engine::Model model;
    std::vector<MonitorSpec> monitors;
    RunSettings run;
    std::optional<SweepSpec> sweep;
    std::vector<double> row_corrections;  ///< original row sums of renormalised wind matrices

    bool operator==(const Scenario& o) const {
        return name == o.name && model == o.model && monitors == o.monitors && run == o.run &&
               sweep == o.sweep;
    }
};

/// Reads and validates a scenario file. Throws ValidationError naming the field.
Scenario load_scenario(const std::filesystem::path& path);

/// Parses JSON text. Throws ValidationError naming the field.
Scenario parse_scenario(const std::string& json_text);

/// Canonical JSON (SI units, kelvin, every field explicit); reparses to an equal Scenario.
std::string serialize_scenario(const Scenario& s);

/// FNV-1a 64 of the canonical serialization, as 16 hex digits.
std::string config_digest(const Scenario& s);

/// One scenario per sweep point (frequency-major), or the scenario itself.
struct SweepPoint {
    double frequency = 0.0;
    int cluster_size = 0;
    Scenario scenario;
};
std::vector<SweepPoint> expand_sweep(const Scenario& s);

/// Applies a transition frequency (lambda = mu = 2 f) and cluster size to one group.
/// Keeps the fraction of clusters initially up at one half.
void set_cluster_regime(engine::Model& model, std::size_t group, double frequency, int cluster_size);

/// Steady-state operating point at t0.
struct LineReport {
    std::string name;
    double temperature = 0.0;            ///< K
    double current = 0.0;                ///< A
    std::vector<double> thresholds;      ///< K, monitored thresholds for this line (may be empty)
    std::vector<double> ampacities;      ///< A at each threshold under the present weather
    double rating_ampacity = 0.0;        ///< A at the conductor's rated temperature
    double margin = 0.0;                 ///< K, rated temperature minus present temperature
};

struct InitialReport {
    std::vector<LineReport> lines;
    bool converged = false;
    std::string error;
};

InitialReport emit_initial_report(const Scenario& s);

}  // namespace linetherm::cli
