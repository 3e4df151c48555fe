#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "linetherm/errors.hpp"
#include "linetherm/thermo.hpp"

using namespace linetherm;
using namespace linetherm::thermo;

namespace {

const ThermalLineParams drake = drake_conductor(20'000.0);
const Weather calm{};

// Reference values below come from an independent script (SciPy brentq and
// DOP853 at rtol 1e-13) evaluating the same heat balance.
constexpr double oracle_tss_19_34 = 338.9536085412456;
constexpr double oracle_tss_67_23 = 373.15051491380865;
constexpr double oracle_ampacity_373 = 844.1165376367419;
constexpr double oracle_ampacity_373_state2 = 1278.517448450414;
constexpr double oracle_t3600_478a = 338.1401457062496;
constexpr double oracle_tss_478a = 338.9485644203744;
constexpr double oracle_zero_current = 324.2213014589617;

}  // namespace

TEST_CASE("drake constants") {
    CHECK(drake.ref_resistance_per_m == 7.3e-5);
    CHECK(drake.resist_temp_coeff == 0.0039);
    CHECK(drake.heat_capacity == 1310.0);
    CHECK(drake.solar_gain == 14.08);
    CHECK(drake.ambient_temp == 313.15);
    CHECK(drake.ref_temp == 298.15);
    CHECK(drake.conv_coeff == 0.948);
    CHECK(drake.rad_coeff == 2.5e-9);
    CHECK(drake.max_operating_temp == 373.15);
    CHECK_NOTHROW(drake.validate());
}

TEST_CASE("parameter validation") {
    ThermalLineParams p = drake;
    p.heat_capacity = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = drake;
    p.resist_temp_coeff = -1e-3;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = drake;
    p.max_operating_temp = p.ambient_temp;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    Weather w;
    w.conv_coeff = -1.0;
    CHECK_THROWS_AS(w.validate(), std::invalid_argument);
    CHECK_THROWS_AS(LineTemperature(0.0), std::invalid_argument);
}

TEST_CASE("resistance_at") {
    CHECK(resistance_at(298.15, drake) == doctest::Approx(7.3e-5).epsilon(1e-15));
    CHECK(resistance_at(373.15, drake) == doctest::Approx(7.3e-5 * (1.0 + 0.0039 * 75.0)).epsilon(1e-14));
    CHECK(std::abs(resistance_at(373.15, drake) - 9.4353e-5) < 1e-9);
    ThermalLineParams flat = drake;
    flat.resist_temp_coeff = 0.0;
    for (double t : {250.0, 298.15, 400.0, 900.0}) CHECK(resistance_at(t, flat) == 7.3e-5);
}

TEST_CASE("thermal_rhs") {
    ThermalLineParams dark = drake;
    dark.solar_gain = 0.0;
    CHECK(thermal_rhs(dark.ambient_temp, 0.0, dark, calm) == 0.0);
    CHECK(std::abs(thermal_rhs(338.95, 19.34, drake, calm)) < 1e-3);

    // Weather overrides replace the conductor's own coefficients.
    Weather windy;
    windy.conv_coeff = 6.063;
    CHECK(thermal_rhs(340.0, 19.34, drake, windy) < thermal_rhs(340.0, 19.34, drake, calm));
    Weather no_sun;
    no_sun.solar_gain = 0.0;
    CHECK(thermal_rhs(340.0, 0.0, drake, no_sun) ==
          doctest::Approx(thermal_rhs(340.0, 0.0, dark, calm)).epsilon(1e-15));

    SUBCASE("energy-balance sign") {
        const double root = steady_state_temperature(19.34, drake, calm);
        CHECK(thermal_rhs(root + 0.5, 19.34, drake, calm) < 0.0);
        CHECK(thermal_rhs(root - 0.5, 19.34, drake, calm) > 0.0);
    }
}

TEST_CASE("steady_state_temperature") {
    ThermalLineParams dark = drake;
    dark.solar_gain = 0.0;
    CHECK(steady_state_temperature(0.0, dark, calm) == doctest::Approx(dark.ambient_temp).epsilon(1e-9));
    CHECK(steady_state_temperature(19.34, drake, calm) == doctest::Approx(oracle_tss_19_34).epsilon(1e-8));
    CHECK(std::abs(steady_state_temperature(19.34, drake, calm) - 338.95) < 0.05);
    CHECK(steady_state_temperature(67.23, drake, calm) == doctest::Approx(oracle_tss_67_23).epsilon(1e-8));
    CHECK(std::abs(steady_state_temperature(67.23, drake, calm) - 373.15) < 0.05);
    CHECK(steady_state_temperature(0.0, drake, calm) == doctest::Approx(oracle_zero_current).epsilon(1e-8));
    CHECK(steady_state_temperature(HeatSource::from_current(478.0, drake), drake, calm) ==
          doctest::Approx(oracle_tss_478a).epsilon(1e-8));
    CHECK_THROWS_AS(steady_state_temperature(1e7, drake, calm), BracketFailure);
    CHECK_THROWS_AS(steady_state_temperature(1e3, drake, calm, 400.0), BracketFailure);

    SUBCASE("root bracketing property") {
        for (double j = 0.0; j <= 400.0; j += 7.5) {
            const double t = steady_state_temperature(j, drake, calm);
            CHECK(t >= drake.ambient_temp);
            CHECK(std::abs(thermal_rhs(t, j, drake, calm)) < 1e-4);
        }
    }
}

TEST_CASE("steady_state_ampacity") {
    CHECK(steady_state_ampacity(373.15, drake, calm) == doctest::Approx(oracle_ampacity_373).epsilon(1e-10));
    CHECK(std::abs(steady_state_ampacity(373.15, drake, calm) - 844.0) < 1.0);

    Weather state1, state2;
    state1.conv_coeff = 0.948;
    state2.conv_coeff = 2.398;
    CHECK(steady_state_ampacity(373.15, drake, state2) > steady_state_ampacity(373.15, drake, state1));
    CHECK(steady_state_ampacity(373.15, drake, state2) ==
          doctest::Approx(oracle_ampacity_373_state2).epsilon(1e-10));

    // Solar gain equal to total cooling at the rating gives zero current.
    ThermalLineParams balanced = drake;
    const double tr = 373.15;
    balanced.solar_gain = balanced.conv_coeff * (tr - balanced.ambient_temp) +
                          balanced.rad_coeff * (std::pow(tr, 4) - std::pow(balanced.ambient_temp, 4));
    CHECK(steady_state_ampacity(tr, balanced, calm) == doctest::Approx(0.0).epsilon(1e-6));
    balanced.solar_gain *= 1.01;
    CHECK_THROWS_AS(steady_state_ampacity(tr, balanced, calm), NegativeRadicand);
    CHECK(ampacity_or_zero(tr, balanced, calm) == 0.0);
    CHECK(ampacity_or_zero(320.0, drake, calm) == 0.0);

    SUBCASE("duality with steady state") {
        for (double tr2 : {330.0, 350.0, 373.15, 400.0}) {
            const double is = steady_state_ampacity(tr2, drake, calm);
            const double j = is * is * resistance_at(tr2, drake);
            CHECK(std::abs(steady_state_temperature(j, drake, calm) - tr2) < 1e-3);
        }
    }
}

TEST_CASE("phase_current_from_loss") {
    CHECK(phase_current_from_loss(0.0, 350.0, drake) == 0.0);
    CHECK(std::abs(phase_current_from_loss(67.23, 373.15, drake) - 844.0) < 0.5);
    CHECK(phase_current_from_loss(67.23, 373.15, drake) ==
          doctest::Approx(steady_state_ampacity(373.15, drake, calm)).epsilon(1e-4));
    const double j = 100.0 * 100.0 * resistance_at(345.0, drake);
    CHECK(phase_current_from_loss(j, 345.0, drake) == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("heat source from current") {
    const HeatSource h = HeatSource::from_current(478.0, drake);
    for (double t : {300.0, 338.95, 373.15}) {
        CHECK(h.at(t) == doctest::Approx(478.0 * 478.0 * resistance_at(t, drake)).epsilon(1e-12));
    }
    CHECK(HeatSource::constant(5.0).at(400.0) == 5.0);
}

TEST_CASE("integrate_temperature") {
    CHECK(integrate_temperature(330.0, 19.34, drake, calm, 5.0, 0.0).value() == 330.0);
    CHECK_THROWS_AS(integrate_temperature(330.0, 19.34, drake, calm, 5.0, 7.0), std::invalid_argument);

    SUBCASE("fixed point") {
        const double t0 = steady_state_temperature(19.34, drake, calm);
        CHECK(std::abs(integrate_temperature(t0, 19.34, drake, calm, 5.0, 3600.0).value() - t0) < 1e-6);
    }
    SUBCASE("heating from ambient at 478 A") {
        const HeatSource h = HeatSource::from_current(478.0, drake);
        const double end = integrate_temperature(drake.ambient_temp, h, drake, calm, 5.0, 3600.0).value();
        CHECK(end == doctest::Approx(oracle_t3600_478a).epsilon(1e-7));
        CHECK(end < oracle_tss_478a);
        double prev = drake.ambient_temp;
        for (int k = 1; k <= 720; ++k) {
            const double t = integrate_temperature(prev, h, drake, calm, 5.0, 5.0).value();
            CHECK(t >= prev);
            CHECK(t <= oracle_tss_478a);
            prev = t;
        }
        CHECK(prev == doctest::Approx(end).epsilon(1e-12));
    }
    SUBCASE("monotone relaxation from above, dt up to 10 s") {
        for (double dt : {1.0, 5.0, 10.0}) {
            double prev = 380.0;
            const double root = steady_state_temperature(19.34, drake, calm);
            for (int k = 0; k < 360; ++k) {
                const double t = integrate_temperature(prev, 19.34, drake, calm, dt, dt).value();
                CHECK(t <= prev);
                CHECK(t >= root);
                prev = t;
            }
        }
    }
    SUBCASE("step-size convergence") {
        for (double j : {0.0, 19.34, 67.23, 120.0}) {
            const double a = integrate_temperature(313.15, j, drake, calm, 10.0, 3600.0).value();
            const double b = integrate_temperature(313.15, j, drake, calm, 5.0, 3600.0).value();
            const double c = integrate_temperature(313.15, j, drake, calm, 2.5, 3600.0).value();
            CHECK(std::abs(a - b) < 1e-3);
            CHECK(std::abs(b - c) < 1e-3);
        }
    }
    SUBCASE("piecewise-constant input") {
        const std::vector<JouleSegment> segs{{600.0, 19.34}, {1200.0, 67.23}, {600.0, 0.0}};
        double t = 330.0;
        for (const JouleSegment& s : segs) t = integrate_temperature(t, s.joule_per_m, drake, calm, 5.0, s.duration_s).value();
        CHECK(integrate_temperature(330.0, segs, drake, calm, 5.0).value() == t);
    }
    SUBCASE("non-finite state") {
        CHECK_THROWS_AS(integrate_temperature(330.0, 1e300, drake, calm, 5.0, 3600.0), NonFiniteState);
    }
    SUBCASE("deterministic") {
        const double a = integrate_temperature(320.0, 40.0, drake, calm, 5.0, 1800.0).value();
        const double b = integrate_temperature(320.0, 40.0, drake, calm, 5.0, 1800.0).value();
        CHECK(a == b);
    }
}
