#include <algorithm>
#include <cmath>
#include <limits>

#include "linetherm/engine.hpp"
#include "linetherm/errors.hpp"

namespace linetherm::engine {

namespace {

constexpr int max_fixed_point_iterations = 200;
constexpr double fixed_point_tolerance_k = 1e-9;

// Destination of a wind-chain jump out of `from` for uniform u.
std::size_t wind_destination(const stoch::WindChain& c, std::size_t from, double u) {
    const double scaled = u * (1.0 - c.p(from, from));
    double acc = 0.0;
    std::size_t to = from;
    for (std::size_t j = 0; j < c.state_count; ++j) {
        if (j == from) continue;
        to = j;
        acc += c.p(from, j);
        if (scaled < acc) break;
    }
    return to;
}

}  // namespace

Simulator::Simulator(const Model& model, thermo::kernels::Isa isa)
    : model_(&model),
      isa_(isa),
      total_steps_(model.total_steps()),
      scratch_(model.network),
      lanes_(model.line_count()) {
    for (std::size_t g = 0; g < model.clusters.size(); ++g) {
        const int n = model.clusters[g].units.cluster_count();
        for (int k = 0; k < n; ++k) cluster_group_.push_back(g);
    }
    cluster_components_ = cluster_group_.size();
}

double Simulator::time_at(std::int64_t step) const noexcept {
    return model_->t0 + static_cast<double>(step) * model_->dt;
}

double Simulator::conv_coeff(const SystemState& s, std::size_t line) const {
    for (std::size_t f = 0; f < model_->wind_farms.size(); ++f) {
        const WindFarm& w = model_->wind_farms[f];
        if (w.couples_weather) return w.chain.conv_coeff[s.wind_state[f]];
    }
    return model_->network.branches[line].thermal.conv_coeff;
}

thermo::Weather Simulator::weather(const SystemState& s, std::size_t line) const {
    thermo::Weather w;
    w.conv_coeff = conv_coeff(s, line);
    return w;
}

double Simulator::phase_current(const SystemState& s, std::size_t line) const {
    return std::sqrt(s.current_sq[line]);
}

std::vector<acpf::BusInjection> Simulator::injections(const SystemState& s) const {
    const acpf::NetworkModel& net = model_->network;
    std::vector<acpf::BusInjection> inj(net.buses.size());
    for (std::size_t b = 0; b < net.buses.size(); ++b) {
        inj[b].p = -s.load_level * net.buses[b].load_p;
        inj[b].q = -s.load_level * net.buses[b].load_q;
    }
    const double sb = net.base_power_mva;
    for (std::size_t c = 0; c < cluster_components_; ++c) {
        if (!s.cluster_up[c]) continue;
        const ClusterGroup& g = model_->clusters[cluster_group_[c]];
        inj[g.bus].p += g.units.cluster_size * g.units.p_max_mw / sb;
        inj[g.bus].q += g.units.cluster_size * g.units.q_mvar / sb;
    }
    for (std::size_t f = 0; f < model_->wind_farms.size(); ++f) {
        const WindFarm& w = model_->wind_farms[f];
        inj[w.bus].p += w.chain.output_p[s.wind_state[f]];
        inj[w.bus].q += w.chain.output_q[s.wind_state[f]];
    }
    return inj;
}

void Simulator::refresh_flow(SystemState& s) {
    const std::size_t lines = model_->line_count();
    for (std::size_t i = 0; i < lines; ++i) {
        acpf::Branch& b = scratch_.branches[i];
        b.current_resistance = acpf::resistance_pu_at(b, s.temps[i]);
        s.resistance_pu[i] = b.current_resistance;
    }
    const std::vector<acpf::BusInjection> inj = injections(s);
    acpf::PowerFlowSolution sol =
        acpf::solve_power_flow(scratch_, inj, s.flow.converged ? &s.flow : nullptr);
    s.flow = std::move(sol);
    for (std::size_t i = 0; i < lines; ++i) {
        const acpf::Branch& b = scratch_.branches[i];
        const double joule = acpf::joule_w_per_m(s.flow, b, scratch_.base_power_mva);
        s.current_sq[i] = joule / thermo::resistance_at(s.temps[i], b.thermal);
    }
}

void Simulator::sample_initial_clocks(SystemState& s) const {
    const double t = time_at(s.step);
    for (std::size_t c = 0; c < cluster_components_; ++c) {
        const stoch::TwoStateCluster& u = model_->clusters[cluster_group_[c]].units;
        s.next_event[c] = t + stoch::sample_up_down_holding(
                                  s.cluster_up[c] ? stoch::UnitState::up : stoch::UnitState::down,
                                  u.up_to_down_rate, u.down_to_up_rate, s.rng);
    }
    for (std::size_t f = 0; f < model_->wind_farms.size(); ++f) {
        const stoch::WindChain& c = model_->wind_farms[f].chain;
        s.next_event[cluster_components_ + f] =
            t + s.rng.exponential(1.0 / c.mean_holding(s.wind_state[f]));
    }
}

void Simulator::reseed(SystemState& s, Rng rng) const {
    s.rng = rng;
    const double t = time_at(s.step);
    // Clocks already due have fired in continuous time and are only waiting
    // for this step boundary; memorylessness applies to the others alone.
    for (std::size_t c = 0; c < cluster_components_; ++c) {
        if (s.next_event[c] <= t) continue;
        const stoch::TwoStateCluster& u = model_->clusters[cluster_group_[c]].units;
        s.next_event[c] = t + stoch::sample_up_down_holding(
                                  s.cluster_up[c] ? stoch::UnitState::up : stoch::UnitState::down,
                                  u.up_to_down_rate, u.down_to_up_rate, s.rng);
    }
    for (std::size_t f = 0; f < model_->wind_farms.size(); ++f) {
        double& next = s.next_event[cluster_components_ + f];
        if (next <= t) continue;
        next = t + s.rng.exponential(1.0 / model_->wind_farms[f].chain.mean_holding(s.wind_state[f]));
    }
}

SystemState Simulator::initial_state(Rng rng) {
    if (!template_) {
        const Model& m = *model_;
        const std::size_t lines = m.line_count();
        SystemState s;
        for (const ClusterGroup& g : m.clusters) {
            const int n = g.units.cluster_count();
            for (int k = 0; k < n; ++k) s.cluster_up.push_back(k < g.units.initial_up_clusters ? 1 : 0);
        }
        for (const WindFarm& w : m.wind_farms) s.wind_state.push_back(w.chain.initial_state);
        s.next_event.assign(cluster_components_ + m.wind_farms.size(),
                            std::numeric_limits<double>::infinity());
        if (m.load_curve) s.load_level = m.load_curve->level_at(m.t0);
        s.temps.assign(thermo::kernels::padded_lanes(lines), 0.0);
        s.resistance_pu.assign(lines, 0.0);
        s.current_sq.assign(lines, 0.0);

        if (m.initial_temperatures) {
            std::copy(m.initial_temperatures->begin(), m.initial_temperatures->end(), s.temps.begin());
            refresh_flow(s);
        } else {
            for (std::size_t i = 0; i < lines; ++i) {
                s.temps[i] = thermo::resolve(m.network.branches[i].thermal, weather(s, i)).ambient_temp;
            }
            for (int it = 0; it < max_fixed_point_iterations; ++it) {
                refresh_flow(s);
                double change = 0.0;
                for (std::size_t i = 0; i < lines; ++i) {
                    const thermo::ThermalLineParams& p = m.network.branches[i].thermal;
                    const double t = thermo::steady_state_temperature(
                        thermo::HeatSource::from_current(phase_current(s, i), p), p, weather(s, i));
                    change = std::max(change, std::abs(t - s.temps[i]));
                    s.temps[i] = t;
                }
                if (change < fixed_point_tolerance_k) break;
            }
            refresh_flow(s);
        }
        template_ = std::move(s);
    }
    SystemState s = *template_;
    s.rng = rng;
    sample_initial_clocks(s);
    return s;
}

double Simulator::next_load_change(double t) const {
    if (!model_->load_curve) return std::numeric_limits<double>::infinity();
    const std::vector<double>& starts = model_->load_curve->starts;
    const auto it = std::upper_bound(starts.begin(), starts.end(), t);
    return it == starts.end() ? std::numeric_limits<double>::infinity() : *it;
}

bool Simulator::apply_due_events(SystemState& s) {
    const double now = time_at(s.step);
    bool changed = false;
    for (;;) {
        const auto it = std::min_element(s.next_event.begin(), s.next_event.end());
        if (it == s.next_event.end() || *it > now) break;
        const std::size_t c = static_cast<std::size_t>(it - s.next_event.begin());
        const double at = *it;
        if (c < cluster_components_) {
            const stoch::TwoStateCluster& u = model_->clusters[cluster_group_[c]].units;
            s.cluster_up[c] = s.cluster_up[c] ? 0 : 1;
            s.next_event[c] = at + stoch::sample_up_down_holding(
                                       s.cluster_up[c] ? stoch::UnitState::up : stoch::UnitState::down,
                                       u.up_to_down_rate, u.down_to_up_rate, s.rng);
        } else {
            const std::size_t f = c - cluster_components_;
            const stoch::WindChain& chain = model_->wind_farms[f].chain;
            s.wind_state[f] = wind_destination(chain, s.wind_state[f], s.rng.uniform());
            s.next_event[c] = at + s.rng.exponential(1.0 / chain.mean_holding(s.wind_state[f]));
        }
        changed = true;
    }
    if (model_->load_curve) {
        const double level = model_->load_curve->level_at(now);
        if (level != s.load_level) {
            s.load_level = level;
            changed = true;
        }
    }
    if (changed) refresh_flow(s);
    return changed;
}

std::int64_t Simulator::next_event_step(const SystemState& s) const {
    double next = next_load_change(time_at(s.step));
    if (!s.next_event.empty()) next = std::min(next, *std::min_element(s.next_event.begin(), s.next_event.end()));
    if (!(next < model_->te)) return total_steps_;
    const auto step = static_cast<std::int64_t>(std::ceil((next - model_->t0) / model_->dt));
    return std::clamp(step, s.step + 1, total_steps_);
}

std::int64_t Simulator::integrate(SystemState& s, std::int64_t until_step, thermo::kernels::Watch watch) {
    const std::size_t lines = model_->line_count();
    const bool coupled = model_->resistance_update == ResistanceUpdate::every_step;
    std::int64_t taken = 0;
    while (s.step < until_step) {
        if (coupled) refresh_flow(s);
        for (std::size_t i = 0; i < lines; ++i) {
            const thermo::ThermalLineParams& p = model_->network.branches[i].thermal;
            const double k = s.current_sq[i] * p.ref_resistance_per_m;
            const thermo::HeatSource heat{k * (1.0 - p.resist_temp_coeff * p.ref_temp),
                                          k * p.resist_temp_coeff};
            lanes_.set(i, heat, thermo::resolve(p, weather(s, i)), p.heat_capacity);
        }
        const std::int64_t budget = coupled ? 1 : until_step - s.step;
        const std::int64_t n = thermo::kernels::advance(isa_, s.temps, lanes_, model_->dt, budget, watch);
        s.step += n;
        taken += n;
        if (n < budget) break;
        if (coupled) {
            const double t = s.temps[watch.lane];
            if (t >= watch.upper || t < watch.lower) break;
        }
    }
    return taken;
}

}  // namespace linetherm::engine
