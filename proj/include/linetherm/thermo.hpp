#pragma once

// Conductor heat balance:
//   rho dT/dt = Q_j(T) + Q_s - A_c (T - T_a) - A_r (T^4 - T_a^4)
// with the linear resistance model r(T) = r_ref [1 + alpha (T - T_ref)].
// All temperatures are absolute (K); per-metre quantities refer to one phase conductor.

#include <optional>
#include <span>

namespace linetherm::thermo {

struct ThermalLineParams {
    double heat_capacity = 0.0;         ///< rho, J/(m K)
    double conv_coeff = 0.0;            ///< A_c, W/(m K)
    double rad_coeff = 0.0;             ///< A_r, W/(m K^4)
    double solar_gain = 0.0;            ///< Q_s, W/m
    double ambient_temp = 0.0;          ///< T_a, K
    double ref_temp = 0.0;              ///< T_ref, K
    double resist_temp_coeff = 0.0;     ///< alpha_ref, 1/K
    double ref_resistance_per_m = 0.0;  ///< Ohm/m at T_ref
    double reactance_per_m = 0.0;       ///< Ohm/m
    double length = 0.0;                ///< m
    double max_operating_temp = 0.0;    ///< T_r, K

    /// Throws std::invalid_argument naming the first violated bound.
    void validate() const;

    bool operator==(const ThermalLineParams&) const = default;
};

/// Drake 26/7 ACSR constants used by both case studies.
ThermalLineParams drake_conductor(double length_m);

/// Optional overrides of the weather-dependent coefficients.
struct Weather {
    std::optional<double> conv_coeff;
    std::optional<double> ambient_temp;
    std::optional<double> solar_gain;

    void validate() const;

    bool operator==(const Weather&) const = default;
};

/// Coefficients in force once weather overrides are applied.
struct Cooling {
    double conv_coeff;
    double rad_coeff;
    double ambient_temp;
    double solar_gain;
};

Cooling resolve(const ThermalLineParams& p, const Weather& w);

/// Strongly typed conductor temperature (K, strictly positive).
class LineTemperature {
public:
    explicit LineTemperature(double kelvin);
    double value() const noexcept { return kelvin_; }

private:
    double kelvin_;
};

/// Joule heating per metre as an affine function of conductor temperature,
/// q(T) = base + slope * T. A fixed phase current gives slope = I^2 r_ref alpha.
struct HeatSource {
    double base = 0.0;
    double slope = 0.0;

    static HeatSource constant(double joule_per_m);
    static HeatSource from_current(double amps, const ThermalLineParams& p);

    double at(double kelvin) const noexcept { return base + slope * kelvin; }
};

/// Absolute resistance per metre at temperature T.
double resistance_at(double kelvin, const ThermalLineParams& p);

/// dT/dt in K/s for a given Joule loss per metre.
double thermal_rhs(double kelvin, double joule_per_m, const ThermalLineParams& p, const Weather& w);
double thermal_rhs(double kelvin, const HeatSource& heat, const ThermalLineParams& p, const Weather& w);

inline constexpr double default_step_s = 5.0;

/// Piece of a piecewise-constant Joule input.
struct JouleSegment {
    double duration_s;
    double joule_per_m;
};

/// Fixed-step classical RK4 integration of the heat balance over `horizon_s`.
/// horizon_s must be an integer multiple of dt_s. Throws NonFiniteState.
LineTemperature integrate_temperature(double initial_kelvin, const HeatSource& heat,
                                      const ThermalLineParams& p, const Weather& w,
                                      double dt_s, double horizon_s);
LineTemperature integrate_temperature(double initial_kelvin, double joule_per_m,
                                      const ThermalLineParams& p, const Weather& w,
                                      double dt_s, double horizon_s);
LineTemperature integrate_temperature(double initial_kelvin, std::span<const JouleSegment> joule,
                                      const ThermalLineParams& p, const Weather& w, double dt_s);

inline constexpr double default_temperature_cap = 2000.0;

/// Unique root T >= T_a of the heat balance, by bisection to 1e-6 K.
/// Throws BracketFailure if the root lies above `cap_kelvin`.
double steady_state_temperature(double joule_per_m, const ThermalLineParams& p, const Weather& w,
                                double cap_kelvin = default_temperature_cap);
double steady_state_temperature(const HeatSource& heat, const ThermalLineParams& p,
                                const Weather& w, double cap_kelvin = default_temperature_cap);

/// Steady-state current that holds the conductor at `rating_kelvin`.
/// Throws NegativeRadicand when solar gain exceeds cooling at the rating.
double steady_state_ampacity(double rating_kelvin, const ThermalLineParams& p, const Weather& w);

/// Same as steady_state_ampacity but returns 0 where the rating is below the
/// zero-current equilibrium (any current exceeds it).
double ampacity_or_zero(double rating_kelvin, const ThermalLineParams& p, const Weather& w);

/// Phase current that dissipates `joule_per_m` at conductor temperature T.
double phase_current_from_loss(double joule_per_m, double kelvin, const ThermalLineParams& p);

}  // namespace linetherm::thermo
