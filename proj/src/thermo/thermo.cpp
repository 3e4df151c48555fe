#include "linetherm/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "linetherm/errors.hpp"
#include "linetherm/thermo_kernels.hpp"

namespace linetherm::thermo {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

double radiation(double t, double ta, double rad_coeff) {
    return rad_coeff * (t * t * t * t - ta * ta * ta * ta);
}

}  // namespace

void ThermalLineParams::validate() const {
    require(heat_capacity > 0.0, "heat_capacity must be > 0");
    require(conv_coeff > 0.0, "conv_coeff must be > 0");
    require(rad_coeff > 0.0, "rad_coeff must be > 0");
    require(length > 0.0, "length must be > 0");
    require(ref_temp > 0.0, "ref_temp must be > 0 K");
    require(ambient_temp > 0.0, "ambient_temp must be > 0 K");
    require(max_operating_temp > ambient_temp, "max_operating_temp must exceed ambient_temp");
    require(resist_temp_coeff >= 0.0, "resist_temp_coeff must be >= 0");
    require(solar_gain >= 0.0, "solar_gain must be >= 0");
    require(ref_resistance_per_m >= 0.0, "ref_resistance_per_m must be >= 0");
}

ThermalLineParams drake_conductor(double length_m) {
    ThermalLineParams p;
    p.ref_resistance_per_m = 7.3e-5;
    p.resist_temp_coeff = 0.0039;
    p.reactance_per_m = 2.5e-4;
    p.heat_capacity = 1310.0;
    p.solar_gain = 14.08;
    p.ambient_temp = 313.15;
    p.ref_temp = 298.15;
    p.conv_coeff = 0.948;
    p.rad_coeff = 2.5e-9;
    p.length = length_m;
    p.max_operating_temp = 373.15;
    return p;
}

void Weather::validate() const {
    if (conv_coeff) require(*conv_coeff > 0.0, "weather conv_coeff must be > 0");
    if (ambient_temp) require(*ambient_temp > 0.0, "weather ambient_temp must be > 0 K");
    if (solar_gain) require(*solar_gain >= 0.0, "weather solar_gain must be >= 0");
}

Cooling resolve(const ThermalLineParams& p, const Weather& w) {
    return Cooling{
        .conv_coeff = w.conv_coeff.value_or(p.conv_coeff),
        .rad_coeff = p.rad_coeff,
        .ambient_temp = w.ambient_temp.value_or(p.ambient_temp),
        .solar_gain = w.solar_gain.value_or(p.solar_gain),
    };
}

LineTemperature::LineTemperature(double kelvin) : kelvin_(kelvin) {
    if (!(kelvin > 0.0)) {
        throw std::invalid_argument("line temperature must be > 0 K, got " + std::to_string(kelvin));
    }
}

HeatSource HeatSource::constant(double joule_per_m) { return HeatSource{joule_per_m, 0.0}; }

HeatSource HeatSource::from_current(double amps, const ThermalLineParams& p) {
    // I^2 r_ref [1 + alpha (T - T_ref)]
    const double k = amps * amps * p.ref_resistance_per_m;
    return HeatSource{k * (1.0 - p.resist_temp_coeff * p.ref_temp), k * p.resist_temp_coeff};
}

double resistance_at(double kelvin, const ThermalLineParams& p) {
    return p.ref_resistance_per_m * (1.0 + p.resist_temp_coeff * (kelvin - p.ref_temp));
}

double thermal_rhs(double kelvin, double joule_per_m, const ThermalLineParams& p, const Weather& w) {
    const Cooling c = resolve(p, w);
    const double convected = c.conv_coeff * (kelvin - c.ambient_temp);
    const double radiated = radiation(kelvin, c.ambient_temp, c.rad_coeff);
    return (joule_per_m + c.solar_gain - convected - radiated) / p.heat_capacity;
}

double thermal_rhs(double kelvin, const HeatSource& heat, const ThermalLineParams& p,
                   const Weather& w) {
    return thermal_rhs(kelvin, heat.at(kelvin), p, w);
}

LineTemperature integrate_temperature(double initial_kelvin, const HeatSource& heat,
                                      const ThermalLineParams& p, const Weather& w,
                                      double dt_s, double horizon_s) {
    if (!(dt_s > 0.0)) throw std::invalid_argument("dt must be > 0");
    if (horizon_s < 0.0) throw std::invalid_argument("horizon must be >= 0");
    const double ratio = horizon_s / dt_s;
    const auto steps = static_cast<std::int64_t>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio)) {
        throw std::invalid_argument("horizon must be an integer multiple of dt");
    }

    kernels::LaneBlock block(1);
    block.set(0, heat, resolve(p, w), p.heat_capacity);
    std::vector<double> temps(block.padded(), 0.0);
    temps[0] = initial_kelvin;
    kernels::advance(kernels::active_isa(), temps, block, dt_s, steps);
    return LineTemperature(temps[0]);
}

LineTemperature integrate_temperature(double initial_kelvin, double joule_per_m,
                                      const ThermalLineParams& p, const Weather& w,
                                      double dt_s, double horizon_s) {
    return integrate_temperature(initial_kelvin, HeatSource::constant(joule_per_m), p, w, dt_s,
                                 horizon_s);
}

LineTemperature integrate_temperature(double initial_kelvin, std::span<const JouleSegment> joule,
                                      const ThermalLineParams& p, const Weather& w, double dt_s) {
    double t = initial_kelvin;
    for (const JouleSegment& seg : joule) {
        t = integrate_temperature(t, seg.joule_per_m, p, w, dt_s, seg.duration_s).value();
    }
    return LineTemperature(t);
}

double steady_state_temperature(const HeatSource& heat, const ThermalLineParams& p,
                                const Weather& w, double cap_kelvin) {
    const Cooling c = resolve(p, w);
    double lo = c.ambient_temp;
    double hi = cap_kelvin;
    if (thermal_rhs(lo, heat, p, w) <= 0.0) return lo;
    if (thermal_rhs(hi, heat, p, w) > 0.0) {
        throw BracketFailure("steady-state temperature exceeds cap of " + std::to_string(cap_kelvin) +
                             " K");
    }
    while (hi - lo >= 1e-7) {
        const double mid = 0.5 * (lo + hi);
        if (thermal_rhs(mid, heat, p, w) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double steady_state_temperature(double joule_per_m, const ThermalLineParams& p, const Weather& w,
                                double cap_kelvin) {
    if (joule_per_m < 0.0) throw std::invalid_argument("joule_per_m must be >= 0");
    return steady_state_temperature(HeatSource::constant(joule_per_m), p, w, cap_kelvin);
}

double steady_state_ampacity(double rating_kelvin, const ThermalLineParams& p, const Weather& w) {
    const Cooling c = resolve(p, w);
    if (!(rating_kelvin > c.ambient_temp)) {
        throw std::invalid_argument("rating temperature must exceed ambient");
    }
    const double cooling = c.conv_coeff * (rating_kelvin - c.ambient_temp) +
                           radiation(rating_kelvin, c.ambient_temp, c.rad_coeff);
    const double numerator = cooling - c.solar_gain;
    if (numerator < 0.0) {
        throw NegativeRadicand("solar gain exceeds cooling at the rating temperature");
    }
    return std::sqrt(numerator / resistance_at(rating_kelvin, p));
}

double ampacity_or_zero(double rating_kelvin, const ThermalLineParams& p, const Weather& w) {
    const Cooling c = resolve(p, w);
    if (!(rating_kelvin > c.ambient_temp)) return 0.0;
    try {
        return steady_state_ampacity(rating_kelvin, p, w);
    } catch (const NegativeRadicand&) {
        return 0.0;
    }
}

double phase_current_from_loss(double joule_per_m, double kelvin, const ThermalLineParams& p) {
    if (joule_per_m < 0.0) throw std::invalid_argument("joule_per_m must be >= 0");
    return std::sqrt(joule_per_m / resistance_at(kelvin, p));
}

}  // namespace linetherm::thermo
