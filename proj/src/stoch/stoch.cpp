#include "linetherm/stoch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "linetherm/errors.hpp"
#include "linetherm/units.hpp"

namespace linetherm::stoch {

void TwoStateCluster::validate() const {
    if (unit_count <= 0) throw std::invalid_argument("unit_count must be > 0");
    if (cluster_size <= 0) throw std::invalid_argument("cluster_size must be > 0");
    if (unit_count % cluster_size != 0) {
        throw std::invalid_argument("unit_count must be divisible by cluster_size");
    }
    if (!(up_to_down_rate > 0.0) || !(down_to_up_rate > 0.0)) {
        throw std::invalid_argument("transition rates must be > 0");
    }
    if (initial_up_clusters < 0 || initial_up_clusters > cluster_count()) {
        throw std::invalid_argument("initial_up_clusters out of range");
    }
}

double TwoStateCluster::frequency() const {
    return transition_frequency(up_to_down_rate, down_to_up_rate);
}

double sample_up_down_holding(UnitState state, double up_to_down_rate, double down_to_up_rate,
                              Rng& rng) {
    return rng.exponential(state == UnitState::up ? up_to_down_rate : down_to_up_rate);
}

double transition_frequency(double up_to_down_rate, double down_to_up_rate) {
    if (!(up_to_down_rate > 0.0) || !(down_to_up_rate > 0.0)) {
        throw std::invalid_argument("transition rates must be > 0");
    }
    return up_to_down_rate * down_to_up_rate / (up_to_down_rate + down_to_up_rate);
}

std::pair<double, double> rates_for_target(double frequency) {
    if (!(frequency > 0.0)) throw std::invalid_argument("frequency must be > 0");
    return {2.0 * frequency, 2.0 * frequency};
}

WindChain WindChain::create(std::vector<double> output_p, std::vector<double> output_q,
                            std::vector<double> transition, double sampling_frequency,
                            std::vector<double> conv_coeff, std::size_t initial_state,
                            std::vector<double>* corrections) {
    WindChain c;
    c.state_count = output_p.size();
    if (transition.size() != c.state_count * c.state_count) {
        throw std::invalid_argument("transition matrix must be n x n");
    }
    if (corrections != nullptr) corrections->assign(c.state_count, 1.0);
    for (std::size_t i = 0; i < c.state_count; ++i) {
        const auto row = transition.begin() + static_cast<std::ptrdiff_t>(i * c.state_count);
        const double sum = std::accumulate(row, row + static_cast<std::ptrdiff_t>(c.state_count), 0.0);
        if (std::abs(sum - 1.0) > 1e-3) {
            throw std::invalid_argument("transition row " + std::to_string(i + 1) +
                                        " sums to " + std::to_string(sum));
        }
        // rows already stochastic to rounding are kept bit-exact
        if (std::abs(sum - 1.0) > 1e-12) {
            std::for_each(row, row + static_cast<std::ptrdiff_t>(c.state_count),
                          [sum](double& v) { v /= sum; });
        }
        if (corrections != nullptr) (*corrections)[i] = sum;
    }
    c.output_p = std::move(output_p);
    c.output_q = std::move(output_q);
    c.transition = std::move(transition);
    c.sampling_frequency = sampling_frequency;
    c.conv_coeff = std::move(conv_coeff);
    c.initial_state = initial_state;
    c.validate();
    return c;
}

void WindChain::validate() const {
    const std::size_t n = state_count;
    if (n == 0) throw std::invalid_argument("wind chain needs at least one state");
    if (output_p.size() != n || output_q.size() != n) {
        throw std::invalid_argument("wind chain output tables must have one entry per state");
    }
    if (!conv_coeff.empty() && conv_coeff.size() != n) {
        throw std::invalid_argument("coupled conv_coeff must have one entry per state");
    }
    for (double a : conv_coeff) {
        if (!(a > 0.0)) throw std::invalid_argument("coupled conv_coeff must be > 0");
    }
    if (transition.size() != n * n) throw std::invalid_argument("transition matrix must be n x n");
    if (!(sampling_frequency > 0.0)) throw std::invalid_argument("sampling_frequency must be > 0");
    if (initial_state >= n) throw std::invalid_argument("initial wind state out of range");
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (p(i, j) < 0.0) throw std::invalid_argument("transition probabilities must be >= 0");
            sum += p(i, j);
        }
        if (std::abs(sum - 1.0) > 1e-3) {
            throw std::invalid_argument("transition row " + std::to_string(i + 1) + " is not stochastic");
        }
        if (!(p(i, i) > 0.0 && p(i, i) < 1.0)) {
            throw std::invalid_argument("diagonal entry of row " + std::to_string(i + 1) +
                                        " must lie in (0, 1)");
        }
    }
}

double WindChain::mean_holding(std::size_t i) const {
    return 1.0 / ((1.0 - p(i, i)) * sampling_frequency);
}

double WindChain::jump_probability(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    return p(i, j) / (1.0 - p(i, i));
}

ComponentEvent wind_next(const WindChain& chain, std::size_t current, double now, Rng& rng,
                         std::size_t component) {
    const double holding = rng.exponential(1.0 / chain.mean_holding(current));
    // inverse transform over the off-diagonal mass of the row
    const double u = rng.uniform() * (1.0 - chain.p(current, current));
    double acc = 0.0;
    std::size_t next = current;
    for (std::size_t j = 0; j < chain.state_count; ++j) {
        if (j == current) continue;
        next = j;
        acc += chain.p(current, j);
        if (u < acc) break;
    }
    return ComponentEvent{now + holding, component, next};
}

std::vector<double> stationary_distribution(const WindChain& chain) {
    const std::size_t n = chain.state_count;
    // irreducibility: every state reaches every other along positive entries
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<bool> seen(n, false);
        std::vector<std::size_t> stack{s};
        seen[s] = true;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t v = 0; v < n; ++v) {
                if (!seen[v] && chain.p(u, v) > 0.0) {
                    seen[v] = true;
                    stack.push_back(v);
                }
            }
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
            throw Reducible("wind chain is not irreducible (state " + std::to_string(s + 1) +
                            " cannot reach every state)");
        }
    }

    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    for (int iter = 0; iter < 10'000'000; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) next[j] += pi[i] * chain.p(i, j);
        }
        const double total = std::accumulate(next.begin(), next.end(), 0.0);
        double residual = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            next[j] /= total;
            residual = std::max(residual, std::abs(next[j] - pi[j]));
        }
        pi.swap(next);
        if (residual < 1e-14) break;
    }
    return pi;
}

void LoadCurve::validate() const {
    if (starts.empty() || starts.size() != levels.size()) {
        throw std::invalid_argument("load curve needs one level per interval");
    }
    for (std::size_t i = 1; i < starts.size(); ++i) {
        if (!(starts[i] > starts[i - 1])) {
            throw std::invalid_argument("load curve breakpoints must be strictly increasing");
        }
    }
    if (!(end > starts.back())) throw std::invalid_argument("load curve end must follow last breakpoint");
    for (double l : levels) {
        if (!(l > 0.0 && l <= 1.0)) throw std::invalid_argument("load levels must lie in (0, 1]");
    }
}

double LoadCurve::level_at(double t) const {
    if (t < starts.front() || t > end) {
        throw OutOfHorizon("time " + std::to_string(t) + " s outside load curve");
    }
    const auto it = std::upper_bound(starts.begin(), starts.end(), t);
    return levels[static_cast<std::size_t>(it - starts.begin()) - 1];
}

LoadCurve hourly_curve(const std::vector<double>& levels) {
    LoadCurve c;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        c.starts.push_back(units::hours(static_cast<double>(i)));
    }
    c.levels = levels;
    c.end = units::hours(static_cast<double>(levels.size()));
    c.validate();
    return c;
}

double ks_statistic_exponential(std::vector<double> samples, double rate) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double cdf = 1.0 - std::exp(-rate * samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
    }
    return d;
}

}  // namespace linetherm::stoch
