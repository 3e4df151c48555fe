#pragma once

// Sequential Monte Carlo engine: system-state evolution with event-driven
// power-flow refresh and fixed-step conductor temperature integration, plus
// crude and RESTART (global-step) estimators of the probability that a
// monitored line reaches a target temperature inside [t0, te).

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "linetherm/acpf.hpp"
#include "linetherm/rng.hpp"
#include "linetherm/stoch.hpp"
#include "linetherm/thermo.hpp"
#include "linetherm/thermo_kernels.hpp"

namespace linetherm::engine {

// ---------------------------------------------------------------------------
// Scenario model
// ---------------------------------------------------------------------------

/// How often branch resistances (and hence the power flow) follow temperature.
enum class ResistanceUpdate {
    on_event,    ///< refresh only when a component changes state (decoupled)
    every_step,  ///< refresh before every integration step (fully coupled)
};

struct ClusterGroup {
    std::string name;
    stoch::TwoStateCluster units;
    std::size_t bus = 0;

    bool operator==(const ClusterGroup&) const = default;
};

struct WindFarm {
    std::string name;
    stoch::WindChain chain;
    std::size_t bus = 0;
    bool couples_weather = true;  ///< sets every line's A_c from the chain state

    bool operator==(const WindFarm&) const = default;
};

struct Model {
    acpf::NetworkModel network;
    std::vector<ClusterGroup> clusters;
    std::vector<WindFarm> wind_farms;
    std::optional<stoch::LoadCurve> load_curve;
    double t0 = 0.0;
    double te = 0.0;
    double dt = thermo::default_step_s;
    std::optional<std::vector<double>> initial_temperatures;  ///< K per line; else steady state
    ResistanceUpdate resistance_update = ResistanceUpdate::on_event;

    void validate() const;
    std::int64_t total_steps() const;
    std::size_t line_count() const { return network.branches.size(); }

    bool operator==(const Model&) const = default;
};

// ---------------------------------------------------------------------------
// System state
// ---------------------------------------------------------------------------

/// Everything needed to continue a sample path; copy it to snapshot.
struct SystemState {
    std::int64_t step = 0;                  ///< clock = t0 + step * dt
    std::vector<unsigned char> cluster_up;  ///< per cluster component
    std::vector<std::size_t> wind_state;    ///< per wind farm
    std::vector<double> next_event;         ///< per stochastic component, absolute s
    double load_level = 1.0;                ///< load multiplier in force
    std::vector<double> temps;              ///< K per line, padded to the kernel lane width
    std::vector<double> resistance_pu;      ///< per line, at the last refresh
    std::vector<double> current_sq;         ///< phase current squared per line, A^2
    acpf::PowerFlowSolution flow;
    Rng rng;

    bool operator==(const SystemState&) const = default;
};

/// Per-worker evolution of SystemState. Not thread safe; one per worker.
class Simulator {
public:
    explicit Simulator(const Model& model, thermo::kernels::Isa isa = thermo::kernels::active_isa());

    const Model& model() const noexcept { return *model_; }
    std::int64_t total_steps() const noexcept { return total_steps_; }
    double time_at(std::int64_t step) const noexcept;

    /// Initial component states, steady-state temperatures (unless given) and
    /// event clocks drawn from `rng`.
    SystemState initial_state(Rng rng);

    /// Applies every component transition due at the current step boundary
    /// (including load steps) and refreshes the power flow. Returns whether
    /// anything changed. Throws NonConvergence.
    bool apply_due_events(SystemState& s);

    /// First step boundary at or after the earliest pending change.
    std::int64_t next_event_step(const SystemState& s) const;

    /// Integrates all line temperatures up to `until_step`, stopping early per `watch`.
    /// Returns the number of steps taken.
    std::int64_t integrate(SystemState& s, std::int64_t until_step, thermo::kernels::Watch watch = {});

    /// Resistances from temperatures, power flow, phase currents. Throws NonConvergence.
    void refresh_flow(SystemState& s);

    /// Replaces the random stream and redraws every exponential clock that has
    /// not yet fired from the current time (memoryless), so that retrials
    /// diverge. Clocks already due at this step are kept.
    void reseed(SystemState& s, Rng rng) const;

    double conv_coeff(const SystemState& s, std::size_t line) const;
    thermo::Weather weather(const SystemState& s, std::size_t line) const;
    double phase_current(const SystemState& s, std::size_t line) const;
    std::vector<acpf::BusInjection> injections(const SystemState& s) const;

private:
    void sample_initial_clocks(SystemState& s) const;
    double next_load_change(double t) const;

    const Model* model_;
    thermo::kernels::Isa isa_;
    std::int64_t total_steps_;
    std::size_t cluster_components_ = 0;
    std::vector<std::size_t> cluster_group_;  ///< group of each cluster component
    acpf::NetworkModel scratch_;
    thermo::kernels::LaneBlock lanes_;
    std::optional<SystemState> template_;
};

// ---------------------------------------------------------------------------
// Monitoring and ladders
// ---------------------------------------------------------------------------

enum class MonitorMode {
    temperature,           ///< dynamic conductor temperature
    steady_state_current,  ///< phase current vs. steady-state ampacity of each threshold
};

std::string to_string(MonitorMode mode);

/// Maps a system state to the number of thresholds T^1..T^m it has reached.
class Monitor {
public:
    Monitor(const Model& model, std::size_t line, std::vector<double> thresholds, MonitorMode mode);

    int level(const Simulator& sim, const SystemState& s) const;
    /// Temperature, or in steady-state mode the equilibrium temperature of the present current.
    double value(const Simulator& sim, const SystemState& s) const;
    /// Early-stop bounds for a path whose processed level is `accounted`.
    thermo::kernels::Watch watch(int accounted) const;

    std::size_t line() const noexcept { return line_; }
    MonitorMode mode() const noexcept { return mode_; }
    const std::vector<double>& thresholds() const noexcept { return thresholds_; }

private:
    std::size_t line_;
    std::vector<double> thresholds_;
    MonitorMode mode_;
    std::size_t weather_farm_ = 0;
    bool weather_coupled_ = false;
    std::vector<std::vector<double>> ampacity_;  ///< [weather state][threshold]
};

struct Crossing {
    std::int64_t step = 0;
    int threshold = 0;  ///< 1-based threshold index
    bool upward = true;
};

/// Evolves `s` until `until_step`, reporting every threshold crossing of the
/// monitored quantity at step granularity.
std::vector<Crossing> advance(Simulator& sim, SystemState& s, std::int64_t until_step,
                              const Monitor& monitor);

struct ThresholdLadder {
    std::size_t line = 0;
    double floor = 0.0;               ///< T^0
    std::vector<double> thresholds;   ///< T^1 < ... < T^m (T^m is the target)
    std::vector<int> retrials;        ///< n_1..n_m, n_1 = 1
    std::vector<double> level_probabilities;  ///< estimated p_1..p_m (informational)

    std::size_t levels() const noexcept { return thresholds.size(); }
    double target() const { return thresholds.back(); }
    double split_product() const;
    void validate() const;

    /// Single-level ladder: plain crude sampling.
    static ThresholdLadder crude(std::size_t line, double target);

    bool operator==(const ThresholdLadder&) const = default;
};

// ---------------------------------------------------------------------------
// Main trials
// ---------------------------------------------------------------------------

/// Per-path peak record used to build a weighted exceedance profile.
struct PeakRecord {
    double start = 0.0;
    double end = 0.0;
};

struct TrialOutcome {
    std::int64_t hits = 0;        ///< chi_{a,k}
    std::int64_t work_steps = 0;  ///< integration steps over the whole splitting tree
    std::int64_t paths = 0;
    std::size_t max_live_frames = 0;
    bool aborted = false;
};

/// Runs one main trial and its splitting tree with an explicit frame stack.
class TrialRunner {
public:
    TrialRunner(const Model& model, ThresholdLadder ladder, MonitorMode mode,
                thermo::kernels::Isa isa = thermo::kernels::active_isa());

    /// Stream keys: (seed, trial) for the main path, (seed, trial, split, retrial) for retrials.
    TrialOutcome run(std::uint64_t seed, std::int64_t trial, std::vector<PeakRecord>* peaks = nullptr);

    const ThresholdLadder& ladder() const noexcept { return ladder_; }
    const Monitor& monitor() const noexcept { return monitor_; }
    Simulator& simulator() noexcept { return sim_; }
    double initial_value();

private:
    struct Path;
    enum class PathEnd { hit, split, finished, killed };
    PathEnd run_path(Path& p, TrialOutcome& out, bool track_peak);

    ThresholdLadder ladder_;
    Simulator sim_;
    Monitor monitor_;
};

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

enum class RunStatus { converged, max_trials, wall_time, zero_hits, invalid };

std::string to_string(RunStatus status);

struct EstimatorOptions {
    double epsilon = 0.05;
    std::int64_t max_trials = 10'000'000;
    std::int64_t min_trials = 100;
    std::int64_t min_hits = 10;  ///< RE from fewer hits is too noisy to stop on
    double max_wall_s = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 1;
    int threads = 1;
    bool record_trace = true;
    MonitorMode mode = MonitorMode::temperature;
};

struct TracePoint {
    std::int64_t trials = 0;
    double elapsed_s = 0.0;
    std::int64_t work_steps = 0;
    double gamma_hat = 0.0;
    double relative_error = 0.0;
};

struct EstimationResult {
    double gamma_hat = 0.0;
    double relative_error = std::numeric_limits<double>::infinity();
    std::int64_t main_trials = 0;     ///< N, excluding aborted trials
    std::int64_t hits = 0;            ///< sum of chi_{a,k}
    std::int64_t hits_sq = 0;         ///< sum of chi_{a,k}^2
    std::vector<std::int32_t> per_trial_hits;
    std::int64_t aborted = 0;
    std::int64_t work_steps = 0;
    std::int64_t paths = 0;
    std::size_t max_live_frames = 0;
    double split_product = 1.0;
    double wall_s = 0.0;
    RunStatus status = RunStatus::max_trials;
    ThresholdLadder ladder;
    MonitorMode mode = MonitorMode::temperature;
    std::vector<TracePoint> trace;

    /// One-sided bound reported when no trial hit: 1 / N.
    double zero_hit_bound() const { return main_trials > 0 ? 1.0 / static_cast<double>(main_trials) : 1.0; }
    bool met_epsilon(double epsilon) const { return hits > 0 && relative_error < epsilon; }
};

/// gamma = sum chi / (N prod n), RE = sqrt(sum chi^2 - (sum chi)^2 / N) / sum chi.
double gamma_from_moments(std::int64_t hits, std::int64_t trials, double split_product);
double relative_error_from_moments(std::int64_t hits, std::int64_t hits_sq, std::int64_t trials);

EstimationResult restart_estimate(const Model& model, const ThresholdLadder& ladder,
                                  const EstimatorOptions& options);

EstimationResult crude_estimate(const Model& model, std::size_t line, double target,
                                const EstimatorOptions& options);

struct PilotOptions {
    std::int64_t trials = 1000;
    double margin = 0.1;         ///< K above the initial value that counts as signal
    std::uint64_t seed = 0x5eed;
    int max_stages = 12;
    std::int64_t min_count = 20; ///< records needed beyond a candidate threshold
    int threads = 1;
    MonitorMode mode = MonitorMode::temperature;
};

/// Places thresholds at exceedance quantiles of trajectory maxima so that every
/// level has conditional probability near e^-2, refining the profile stage by
/// stage with provisional splitting. Throws InsufficientSignal.
ThresholdLadder pilot_run(const Model& model, std::size_t line, double target,
                          const PilotOptions& options);

/// Weighted estimate of P(max >= x) from peak records of a run with `ladder`.
double exceedance_from_peaks(std::span<const PeakRecord> peaks, const ThresholdLadder& ladder,
                             std::int64_t trials, double x);

/// Retrial counts n_i = round(sqrt(1 / (p_i p_{i+1}))) with p_{m+1} = 1, n_1 = 1, n_i >= 2.
std::vector<int> retrials_for(std::span<const double> level_probabilities);

/// Probability of the phase current reaching the steady-state ampacity of each
/// threshold under the prevailing weather. One result per threshold.
std::vector<EstimationResult> steady_state_exceedance_estimate(const Model& model, std::size_t line,
                                                               std::span<const double> thresholds,
                                                               const EstimatorOptions& options,
                                                               const PilotOptions& pilot);

/// Monitored-line temperature after every step of one sample path (index 0 is t0).
std::vector<double> temperature_path(const Model& model, std::size_t line, std::uint64_t seed,
                                     std::int64_t trial);

}  // namespace linetherm::engine
