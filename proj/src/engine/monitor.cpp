#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "linetherm/engine.hpp"
#include "linetherm/errors.hpp"

namespace linetherm::engine {

std::string to_string(MonitorMode mode) {
    return mode == MonitorMode::temperature ? "temperature" : "steady_state";
}

Monitor::Monitor(const Model& model, std::size_t line, std::vector<double> thresholds, MonitorMode mode)
    : line_(line), thresholds_(std::move(thresholds)), mode_(mode) {
    if (line_ >= model.line_count()) throw std::invalid_argument("monitored line out of range");
    if (thresholds_.empty()) throw std::invalid_argument("monitor needs at least one threshold");
    for (std::size_t i = 1; i < thresholds_.size(); ++i) {
        if (!(thresholds_[i] > thresholds_[i - 1])) {
            throw std::invalid_argument("thresholds must be strictly increasing");
        }
    }
    if (mode_ != MonitorMode::steady_state_current) return;

    const thermo::ThermalLineParams& p = model.network.branches[line_].thermal;
    std::vector<thermo::Weather> weathers{thermo::Weather{}};
    for (std::size_t f = 0; f < model.wind_farms.size(); ++f) {
        const WindFarm& w = model.wind_farms[f];
        if (!w.couples_weather) continue;
        weather_coupled_ = true;
        weather_farm_ = f;
        weathers.clear();
        for (double a : w.chain.conv_coeff) {
            thermo::Weather wa;
            wa.conv_coeff = a;
            weathers.push_back(wa);
        }
    }
    for (const thermo::Weather& w : weathers) {
        std::vector<double> row;
        for (double t : thresholds_) row.push_back(thermo::ampacity_or_zero(t, p, w));
        ampacity_.push_back(std::move(row));
    }
}

int Monitor::level(const Simulator& sim, const SystemState& s) const {
    int n = 0;
    if (mode_ == MonitorMode::temperature) {
        const double t = s.temps[line_];
        for (double th : thresholds_) n += t >= th ? 1 : 0;
        return n;
    }
    const double amps = sim.phase_current(s, line_);
    const std::vector<double>& row = ampacity_[weather_coupled_ ? s.wind_state[weather_farm_] : 0];
    for (double a : row) n += amps >= a ? 1 : 0;
    return n;
}

double Monitor::value(const Simulator& sim, const SystemState& s) const {
    if (mode_ == MonitorMode::temperature) return s.temps[line_];
    const thermo::ThermalLineParams& p = sim.model().network.branches[line_].thermal;
    return thermo::steady_state_temperature(thermo::HeatSource::from_current(sim.phase_current(s, line_), p),
                                            p, sim.weather(s, line_));
}

thermo::kernels::Watch Monitor::watch(int accounted) const {
    thermo::kernels::Watch w;
    w.lane = line_;
    if (mode_ != MonitorMode::temperature) return w;
    const auto m = static_cast<int>(thresholds_.size());
    if (accounted < m) w.upper = thresholds_[static_cast<std::size_t>(accounted)];
    if (accounted > 0) w.lower = thresholds_[static_cast<std::size_t>(accounted - 1)];
    return w;
}

std::vector<Crossing> advance(Simulator& sim, SystemState& s, std::int64_t until_step, const Monitor& monitor) {
    std::vector<Crossing> out;
    until_step = std::min(until_step, sim.total_steps());
    int level = monitor.level(sim, s);
    auto record = [&](int now) {
        for (int j = level + 1; j <= now; ++j) out.push_back(Crossing{s.step, j, true});
        for (int j = level; j > now; --j) out.push_back(Crossing{s.step, j, false});
        level = now;
    };
    while (s.step < until_step) {
        if (sim.apply_due_events(s)) {
            record(monitor.level(sim, s));
            continue;
        }
        const std::int64_t next = std::min(until_step, sim.next_event_step(s));
        sim.integrate(s, next, monitor.watch(level));
        record(monitor.level(sim, s));
    }
    if (s.step == until_step && sim.apply_due_events(s)) record(monitor.level(sim, s));
    return out;
}

double ThresholdLadder::split_product() const {
    double p = 1.0;
    for (int n : retrials) p *= n;
    return p;
}

void ThresholdLadder::validate() const {
    if (thresholds.empty()) throw std::invalid_argument("ladder needs at least the target threshold");
    if (retrials.size() != thresholds.size()) {
        throw std::invalid_argument("ladder needs one retrial count per threshold");
    }
    if (retrials.front() != 1) throw std::invalid_argument("first retrial count must be 1");
    for (int n : retrials) {
        if (n < 1) throw std::invalid_argument("retrial counts must be >= 1");
    }
    if (!(thresholds.front() > floor)) throw std::invalid_argument("first threshold must exceed the floor");
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > thresholds[i - 1])) {
            throw std::invalid_argument("thresholds must be strictly increasing");
        }
    }
}

ThresholdLadder ThresholdLadder::crude(std::size_t line, double target) {
    ThresholdLadder l;
    l.line = line;
    l.floor = -std::numeric_limits<double>::infinity();
    l.thresholds = {target};
    l.retrials = {1};
    return l;
}

}  // namespace linetherm::engine
