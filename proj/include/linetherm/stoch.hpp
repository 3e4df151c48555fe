#pragma once

// Component state models: two-state generating units (optionally clustered),
// a discrete-state wind-farm Markov chain, and a stepped load curve.
// Rates are per second; times are seconds.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "linetherm/rng.hpp"

namespace linetherm::stoch {

enum class UnitState : unsigned char { down = 0, up = 1 };

/// NG identical units aggregated into NG/C clusters that switch together.
struct TwoStateCluster {
    int unit_count = 0;
    int cluster_size = 1;
    double p_max_mw = 0.0;       ///< per unit
    double q_mvar = 0.0;         ///< per unit, while up
    double up_to_down_rate = 0.0;
    double down_to_up_rate = 0.0;
    int initial_up_clusters = 0;

    void validate() const;
    int cluster_count() const { return unit_count / cluster_size; }
    double frequency() const;

    bool operator==(const TwoStateCluster&) const = default;
};

/// Holding time in `state`: rate lambda when up, mu when down.
double sample_up_down_holding(UnitState state, double up_to_down_rate, double down_to_up_rate,
                              Rng& rng);

/// Mean number of up-down-up cycles per unit time, lambda mu / (lambda + mu).
double transition_frequency(double up_to_down_rate, double down_to_up_rate);

/// Rates (lambda, mu) with lambda == mu that realise transition frequency f.
std::pair<double, double> rates_for_target(double frequency);

struct WindChain {
    std::size_t state_count = 0;
    std::vector<double> output_p;     ///< p.u. per state
    std::vector<double> output_q;     ///< p.u. per state
    std::vector<double> transition;   ///< row-major n x n, row-stochastic
    double sampling_frequency = 0.0;  ///< nu, 1/s
    std::vector<double> conv_coeff;   ///< coupled A_c per state (may be empty)
    std::size_t initial_state = 0;

    /// Builds a chain, renormalising each row of `transition` to sum to one.
    /// `corrections` (optional) receives each row's original sum.
    static WindChain create(std::vector<double> output_p, std::vector<double> output_q,
                            std::vector<double> transition, double sampling_frequency,
                            std::vector<double> conv_coeff, std::size_t initial_state,
                            std::vector<double>* corrections = nullptr);

    void validate() const;

    double p(std::size_t i, std::size_t j) const { return transition[i * state_count + j]; }
    /// tau_i = 1 / ((1 - p_ii) nu)
    double mean_holding(std::size_t i) const;
    /// Conditional jump probability p_ij / (1 - p_ii), zero for j == i.
    double jump_probability(std::size_t i, std::size_t j) const;

    bool operator==(const WindChain&) const = default;
};

struct ComponentEvent {
    double time = 0.0;
    std::size_t component = 0;
    std::size_t new_state = 0;
};

/// Next transition of the wind chain out of `current`, starting at `now`.
ComponentEvent wind_next(const WindChain& chain, std::size_t current, double now, Rng& rng,
                         std::size_t component = 0);

/// Stationary distribution of the transition matrix (pi P = pi) by power
/// iteration to a 1e-12 residual. Throws Reducible.
std::vector<double> stationary_distribution(const WindChain& chain);

/// Stepwise-constant load level, right-continuous at breakpoints.
struct LoadCurve {
    std::vector<double> starts;  ///< interval start times, strictly increasing, first is t0
    std::vector<double> levels;  ///< fraction of peak in (0, 1]
    double end = 0.0;            ///< end of the last interval

    void validate() const;
    /// Throws OutOfHorizon outside [starts.front(), end].
    double level_at(double t) const;

    bool operator==(const LoadCurve&) const = default;
};

/// Table-based hourly curve for the four-hour operational window.
LoadCurve hourly_curve(const std::vector<double>& levels);

/// Kolmogorov-Smirnov statistic of `samples` against Exponential(rate).
double ks_statistic_exponential(std::vector<double> samples, double rate);

}  // namespace linetherm::stoch
