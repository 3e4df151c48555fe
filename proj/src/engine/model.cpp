#include <cmath>
#include <stdexcept>
#include <string>

#include "linetherm/engine.hpp"

namespace linetherm::engine {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void Model::validate() const {
    network.validate();
    for (const acpf::Branch& b : network.branches) b.thermal.validate();
    require(dt > 0.0, "dt must be > 0");
    require(te > t0, "te must exceed t0");
    const double ratio = (te - t0) / dt;
    require(std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio),
            "window length must be an integer multiple of dt");

    const std::size_t buses = network.buses.size();
    for (const ClusterGroup& g : clusters) {
        g.units.validate();
        require(g.bus < buses, "cluster group '" + g.name + "' bus out of range");
    }
    int coupled = 0;
    for (const WindFarm& w : wind_farms) {
        w.chain.validate();
        require(w.bus < buses, "wind farm '" + w.name + "' bus out of range");
        if (w.couples_weather) {
            require(!w.chain.conv_coeff.empty(),
                    "wind farm '" + w.name + "' couples weather but has no conv_coeff table");
            ++coupled;
        }
    }
    require(coupled <= 1, "at most one wind farm may set line weather");

    if (load_curve) {
        load_curve->validate();
        require(load_curve->starts.front() <= t0 && load_curve->end >= te,
                "load curve must cover the whole window");
    }
    if (initial_temperatures) {
        require(initial_temperatures->size() == line_count(),
                "initial_temperatures needs one entry per line");
        for (double t : *initial_temperatures) require(t > 0.0, "initial temperatures must be > 0 K");
    }
}

std::int64_t Model::total_steps() const { return std::llround((te - t0) / dt); }

}  // namespace linetherm::engine
