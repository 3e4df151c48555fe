#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "../common/toys.hpp"
#include "linetherm/engine.hpp"
#include "linetherm/errors.hpp"
#include "linetherm/thermo.hpp"

using namespace linetherm;
using namespace linetherm::engine;

namespace {

// Cached: the repair race with gamma near 0.3 over 4 h and with 80 MW.
const toys::RepairRace& race30() {
    static const toys::RepairRace r = [] {
        const toys::RepairRace probe = toys::repair_race(0.1);
        return toys::repair_race(toys::mu_for_gamma(0.3, 4.0, probe.heat_steps));
    }();
    return r;
}

ThresholdLadder three_level(double lo, double mid) {
    ThresholdLadder l;
    l.line = 0;
    l.floor = 324.0;
    l.thresholds = {lo, mid, toys::target_k};
    l.retrials = {1, 3, 4};
    l.validate();
    return l;
}

bool covers(const EstimationResult& r, double truth, double sigmas) {
    return std::abs(r.gamma_hat - truth) <= sigmas * r.relative_error * r.gamma_hat;
}

}  // namespace

TEST_CASE("moment formulas") {
    CHECK(gamma_from_moments(1, 2, 6.0) == doctest::Approx(1.0 / 12.0));
    CHECK(gamma_from_moments(0, 10, 1.0) == 0.0);

    // chi = {2, 1, 0, 0}
    const std::vector<double> chi{2, 1, 0, 0};
    const double n = 4.0, sum = 3.0;
    const double mean = sum / n;
    double ss = 0.0;
    for (double c : chi) ss += (c - mean) * (c - mean);
    const double expected = std::sqrt(ss) / sum;  // sqrt(N var) / sum = sd(gamma_hat) / gamma_hat
    CHECK(relative_error_from_moments(3, 5, 4) == doctest::Approx(expected));
    CHECK(std::isinf(relative_error_from_moments(0, 0, 5)));
}

TEST_CASE("ladder structure") {
    const ThresholdLadder c = ThresholdLadder::crude(2, 370.0);
    CHECK(c.levels() == 1);
    CHECK(c.target() == 370.0);
    CHECK(c.split_product() == 1.0);
    CHECK_NOTHROW(c.validate());

    ThresholdLadder l = three_level(330.0, 350.0);
    CHECK(l.split_product() == 12.0);
    l.thresholds = {350.0, 330.0, 373.15};
    CHECK_THROWS(l.validate());
    l = three_level(330.0, 350.0);
    l.retrials = {2, 3, 4};
    CHECK_THROWS(l.validate());
    l.retrials = {1, 3};
    CHECK_THROWS(l.validate());

    const double e2 = std::exp(-2.0);
    const std::vector<double> p{e2, e2, e2};
    const std::vector<int> n = retrials_for(p);
    CHECK(n == std::vector<int>{1, 7, 3});
    const std::vector<double> easy{0.9, 0.9};
    CHECK(retrials_for(easy) == std::vector<int>{1, 2});
}

TEST_CASE("model validation") {
    Model m = race30().model;
    CHECK_NOTHROW(m.validate());
    CHECK(m.total_steps() == 2880);
    m.te = m.t0 + 7.0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m = race30().model;
    m.clusters[0].bus = 9;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m = race30().model;
    m.initial_temperatures = std::vector<double>{300.0, 300.0};
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("toy heating time is sane") {
    const toys::RepairRace& r = race30();
    CHECK(r.heat_steps > 10);
    CHECK(r.heat_steps < r.model.total_steps() / 2);
    CHECK(r.gamma == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(r.gamma_steady > r.gamma);
}

TEST_CASE("integration without events matches the single-line integrator") {
    engine::Model hot = cli::parse_scenario(toys::repair_race_json(1e-12, 4.0, 80.0, 1)).model;
    hot.initial_temperatures = std::vector<double>{330.0};
    Simulator sim(hot);
    SystemState s = sim.initial_state(Rng({7}));
    CHECK(sim.next_event_step(s) >= sim.total_steps());

    const thermo::ThermalLineParams& p = hot.network.branches[0].thermal;
    const double amps = sim.phase_current(s, 0);
    CHECK(amps > 0.0);
    const double direct =
        thermo::integrate_temperature(330.0, thermo::HeatSource::from_current(amps, p), p, sim.weather(s, 0),
                                      hot.dt, 3600.0)
            .value();
    CHECK(sim.integrate(s, 720) == 720);
    CHECK(s.step == 720);
    CHECK(s.temps[0] == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("advance reports crossings at step granularity") {
    engine::Model hot = cli::parse_scenario(toys::repair_race_json(1e-12, 4.0, 80.0, 1)).model;
    hot.initial_temperatures = std::vector<double>{temperature_path(race30().model, 0, 1, 0).front()};
    const std::vector<double> path = temperature_path(hot, 0, 1, 0);
    Simulator sim(hot);
    Monitor mon(hot, 0, {340.0, 360.0}, MonitorMode::temperature);
    SystemState s = sim.initial_state(Rng({1, 0}));
    const std::vector<Crossing> xs = advance(sim, s, sim.total_steps(), mon);
    REQUIRE(xs.size() == 2);
    for (const Crossing& c : xs) {
        CHECK(c.upward);
        const double thr = c.threshold == 1 ? 340.0 : 360.0;
        const auto k = static_cast<std::size_t>(c.step);
        CHECK(path[k] >= thr);
        CHECK(path[k - 1] < thr);
    }
    CHECK(xs[0].threshold == 1);
    CHECK(xs[1].threshold == 2);
    CHECK(xs[0].step < xs[1].step);
}

TEST_CASE("temperature is continuous across events") {
    const std::vector<double> path = temperature_path(race30().model, 0, 3, 11);
    double worst = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) worst = std::max(worst, std::abs(path[k] - path[k - 1]));
    CHECK(worst < 1.0);  // K per 5 s step; a jump would mean state reset on refresh
}

TEST_CASE("snapshots continue bit-identically") {
    const Model& m = race30().model;
    Simulator a(m), b(m);
    SystemState s = a.initial_state(Rng({5, 1}));
    a.integrate(s, 100);
    SystemState copy = s;
    CHECK(copy == s);
    for (SystemState* x : {&s, &copy}) {
        Simulator& sim = x == &s ? a : b;
        while (x->step < sim.total_steps()) {
            sim.apply_due_events(*x);
            sim.integrate(*x, std::min(sim.next_event_step(*x), sim.total_steps()));
        }
    }
    CHECK(copy == s);
}

TEST_CASE("reseed redraws pending clocks from the current time") {
    const Model& m = race30().model;
    Simulator sim(m);
    SystemState s = sim.initial_state(Rng({2, 2}));
    sim.integrate(s, 10);
    SystemState a = s, b = s;
    sim.reseed(a, Rng({2, 2, 0, 0}));
    sim.reseed(b, Rng({2, 2, 0, 1}));
    CHECK(a.next_event[0] != b.next_event[0]);
    CHECK(a.next_event[0] >= sim.time_at(10));
    CHECK(b.next_event[0] >= sim.time_at(10));
}

TEST_CASE("crude estimate on the repair race") {
    const toys::RepairRace& r = race30();
    EstimatorOptions o;
    o.epsilon = 0.05;
    o.seed = 11;
    const EstimationResult e = crude_estimate(r.model, 0, toys::target_k, o);
    CHECK(e.status == RunStatus::converged);
    CHECK(e.relative_error < 0.05);
    CHECK(e.main_trials >= 100);
    CHECK(covers(e, r.gamma, 3.5));
    CHECK(e.split_product == 1.0);
    CHECK(e.per_trial_hits.size() == static_cast<std::size_t>(e.main_trials));
    CHECK(std::accumulate(e.per_trial_hits.begin(), e.per_trial_hits.end(), std::int64_t{0}) == e.hits);
}

TEST_CASE("restart estimate on the repair race") {
    const toys::RepairRace& r = race30();
    EstimatorOptions o;
    o.epsilon = 0.05;
    o.seed = 12;
    const ThresholdLadder l = three_level(335.0, 355.0);
    const EstimationResult e = restart_estimate(r.model, l, o);
    CHECK(e.status == RunStatus::converged);
    CHECK(covers(e, r.gamma, 3.5));
    CHECK(e.split_product == 12.0);
    CHECK(e.max_live_frames <= l.levels() - 1);
    for (std::int32_t chi : e.per_trial_hits) CHECK(chi <= 12);
    CHECK(e.gamma_hat == doctest::Approx(gamma_from_moments(e.hits, e.main_trials, 12.0)));
}

TEST_CASE("restart with diverging retrials on the failure race") {
    const toys::FailureRace r = toys::failure_race(1e-3);
    CHECK(r.gamma == doctest::Approx(1e-3).epsilon(1e-9));
    EstimatorOptions o;
    o.epsilon = 0.05;
    o.seed = 13;
    ThresholdLadder l;
    l.floor = 324.0;
    l.thresholds = {345.0, 360.0, toys::target_k};
    l.retrials = {1, 6, 5};
    const EstimationResult e = restart_estimate(r.model, l, o);
    CHECK(e.status == RunStatus::converged);
    CHECK(covers(e, r.gamma, 3.5));
    // chi strictly between 0 and the split product shows the retrials took different courses
    bool partial = false;
    for (std::int32_t chi : e.per_trial_hits) partial = partial || (chi > 0 && chi < 30);
    CHECK(partial);
}

TEST_CASE("reseed keeps clocks that are already due") {
    const toys::FailureRace r = toys::failure_race(1e-3);
    Simulator sim(r.model);
    SystemState s = sim.initial_state(Rng({1}));
    s.step = 10;
    const double now = sim.time_at(10);
    s.next_event[0] = now - 1.0;
    sim.reseed(s, Rng({1, 2, 3}));
    CHECK(s.next_event[0] == now - 1.0);
    s.next_event[0] = now + 1.0;
    sim.reseed(s, Rng({1, 2, 3}));
    CHECK(s.next_event[0] != now + 1.0);
    CHECK(s.next_event[0] > now);
}

TEST_CASE("a one-level ladder is crude sampling trial by trial") {
    const Model& m = race30().model;
    EstimatorOptions o;
    o.epsilon = 1e-9;
    o.max_trials = 300;
    o.seed = 4;
    ThresholdLadder one = ThresholdLadder::crude(0, toys::target_k);
    one.floor = 300.0;
    const EstimationResult a = crude_estimate(m, 0, toys::target_k, o);
    const EstimationResult b = restart_estimate(m, one, o);
    CHECK(a.per_trial_hits == b.per_trial_hits);
    CHECK(a.gamma_hat == b.gamma_hat);
    CHECK(a.status == RunStatus::max_trials);
}

TEST_CASE("estimates are reproducible and independent of thread count") {
    const Model& m = race30().model;
    EstimatorOptions o;
    o.epsilon = 1e-9;
    o.max_trials = 96;
    o.seed = 9;
    o.threads = 2;
    const ThresholdLadder l = three_level(335.0, 355.0);
    const EstimationResult a = restart_estimate(m, l, o);
    const EstimationResult b = restart_estimate(m, l, o);
    o.threads = 3;
    const EstimationResult c = restart_estimate(m, l, o);
    CHECK(a.per_trial_hits == b.per_trial_hits);
    CHECK(a.per_trial_hits == c.per_trial_hits);
    CHECK(a.work_steps == c.work_steps);
    o.seed = 10;
    const EstimationResult d = restart_estimate(m, l, o);
    CHECK(d.per_trial_hits != a.per_trial_hits);
}

TEST_CASE("degenerate answers") {
    // Unit already up at steady state above the target: every path starts hit.
    engine::Model up = cli::parse_scenario(toys::repair_race_json(1e-12, 1.0, 80.0, 1)).model;
    EstimatorOptions o;
    o.seed = 3;
    const EstimationResult sure = crude_estimate(up, 0, toys::target_k, o);
    CHECK(sure.gamma_hat == 1.0);
    CHECK(sure.relative_error == 0.0);
    CHECK(sure.main_trials == 100);
    CHECK(sure.status == RunStatus::converged);

    // Repair practically impossible: nothing ever hits.
    engine::Model never = cli::parse_scenario(toys::repair_race_json(1e-12, 1.0, 80.0, 0)).model;
    o.max_trials = 500;
    const EstimationResult none = crude_estimate(never, 0, toys::target_k, o);
    CHECK(none.status == RunStatus::zero_hits);
    CHECK(none.gamma_hat == 0.0);
    CHECK(none.zero_hit_bound() == doctest::Approx(1.0 / 500.0));
    CHECK_FALSE(none.met_epsilon(0.1));
}

TEST_CASE("restart rejects a ladder the initial state already exceeds") {
    ThresholdLadder l;
    l.floor = 290.0;
    l.thresholds = {300.0, 355.0, toys::target_k};
    l.retrials = {1, 3, 4};
    EstimatorOptions o;
    o.max_trials = 10;
    CHECK_THROWS_AS(restart_estimate(race30().model, l, o), LadderMismatch);
}

TEST_CASE("pilot") {
    const toys::RepairRace& r = race30();
    PilotOptions po;
    po.trials = 400;
    const ThresholdLadder easy = pilot_run(r.model, 0, toys::target_k, po);
    CHECK(easy.levels() == 1);  // gamma ~ 0.3 needs no splitting
    CHECK(easy.retrials == std::vector<int>{1});

    const toys::RepairRace rare = toys::repair_race(toys::mu_for_gamma(2e-3, 4.0, r.heat_steps));
    po.trials = 1000;
    const ThresholdLadder hard = pilot_run(rare.model, 0, toys::target_k, po);
    CHECK(hard.levels() >= 2);
    CHECK(hard.floor < hard.thresholds.front());
    CHECK(hard.target() == toys::target_k);
    CHECK(hard.retrials.front() == 1);
    double prod = 1.0;
    for (double p : hard.level_probabilities) prod *= p;
    CHECK(prod == doctest::Approx(2e-3).epsilon(0.6));

    EstimatorOptions o;
    o.epsilon = 0.1;
    o.seed = 21;
    const EstimationResult e = restart_estimate(rare.model, hard, o);
    CHECK(covers(e, rare.gamma, 3.5));
    CHECK(e.max_live_frames <= hard.levels() - 1);

    // Already at the target from the start.
    engine::Model up = cli::parse_scenario(toys::repair_race_json(1e-12, 1.0, 80.0, 1)).model;
    CHECK_THROWS_AS(pilot_run(up, 0, toys::target_k, po), LadderMismatch);
    // No movement at all.
    engine::Model never = cli::parse_scenario(toys::repair_race_json(1e-12, 1.0, 80.0, 0)).model;
    CHECK_THROWS_AS(pilot_run(never, 0, toys::target_k, po), InsufficientSignal);
    po.trials = 50;
    CHECK_THROWS_AS(pilot_run(r.model, 0, toys::target_k, po), std::invalid_argument);
}

TEST_CASE("exceedance profile from peak records") {
    ThresholdLadder l = three_level(330.0, 350.0);
    const std::vector<PeakRecord> peaks{{324, 331}, {330, 340}, {330, 352}, {350, 360}};
    // above 350 a segment carries weight 1/(1*3*4)
    CHECK(exceedance_from_peaks(peaks, l, 2, 355.0) == doctest::Approx(1.0 / 12.0 / 2.0));
    // in (330, 350] weight 1/3: three records cover 335
    CHECK(exceedance_from_peaks(peaks, l, 2, 335.0) == doctest::Approx(2.0 / 3.0 / 2.0));
    CHECK(exceedance_from_peaks(peaks, l, 2, 325.0) == doctest::Approx(0.5));
    CHECK(exceedance_from_peaks(peaks, l, 0, 325.0) == 0.0);
}

TEST_CASE("steady-state monitoring") {
    const toys::RepairRace& r = race30();
    EstimatorOptions o;
    o.epsilon = 0.05;
    o.seed = 31;
    o.mode = MonitorMode::steady_state_current;
    const EstimationResult ss = crude_estimate(r.model, 0, toys::target_k, o);
    CHECK(covers(ss, r.gamma_steady, 3.5));
    CHECK(ss.gamma_hat > r.gamma);

    Simulator sim(r.model);
    Monitor mon(r.model, 0, {toys::target_k}, MonitorMode::steady_state_current);
    const SystemState s = sim.initial_state(Rng({1}));
    CHECK(mon.value(sim, s) == doctest::Approx(s.temps[0]).epsilon(1e-9));
    CHECK(mon.level(sim, s) == 0);

    // A held current above the target's ampacity counts from the first instant.
    engine::Model up = cli::parse_scenario(toys::repair_race_json(1e-12, 1.0, 80.0, 1)).model;
    up.initial_temperatures = std::vector<double>{s.temps[0]};
    Simulator usim(up);
    const SystemState us = usim.initial_state(Rng({1}));
    const thermo::ThermalLineParams& p = up.network.branches[0].thermal;
    CHECK(usim.phase_current(us, 0) > thermo::steady_state_ampacity(toys::target_k, p, usim.weather(us, 0)));
    o.max_trials = 100;
    const EstimationResult sure = crude_estimate(up, 0, toys::target_k, o);
    CHECK(sure.gamma_hat == 1.0);
    o.mode = MonitorMode::temperature;
    const EstimationResult dyn = crude_estimate(up, 0, toys::target_k, o);
    CHECK(dyn.gamma_hat == 1.0);  // one hour is long enough to heat up
}

TEST_CASE("coupled and decoupled resistance updates stay close near rating") {
    const Model a = cli::load_scenario(std::string(LINETHERM_SOURCE_DIR) + "/scenarios/example_a.cfg").model;
    Model coupled = a;
    coupled.resistance_update = ResistanceUpdate::every_step;
    double worst = 0.0;
    for (std::int64_t k = 0; k < 10; ++k) {
        const std::vector<double> x = temperature_path(a, 0, 8, k);
        const std::vector<double> y = temperature_path(coupled, 0, 8, k);
        REQUIRE(x.size() == y.size());
        for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
    }
    CHECK(worst < 0.5);

    // Far past rating the held current drifts: with 80 MW the line settles
    // near 160 C and the fully coupled path ends several kelvin cooler.
    engine::Model hot = cli::parse_scenario(toys::repair_race_json(1e-12, 4.0, 80.0, 1)).model;
    hot.initial_temperatures = std::vector<double>{330.0};
    Model hot_coupled = hot;
    hot_coupled.resistance_update = ResistanceUpdate::every_step;
    CHECK(temperature_path(hot_coupled, 0, 1, 0).back() < temperature_path(hot, 0, 1, 0).back() - 1.0);
}
