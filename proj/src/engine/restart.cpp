#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <memory>

#include "linetherm/engine.hpp"
#include "linetherm/errors.hpp"
#include "parallel.hpp"

namespace linetherm::engine {

struct TrialRunner::Path {
    SystemState state;
    int kill_level = 0;  ///< terminate when the level falls below this
    int accounted = 0;   ///< highest threshold this path has already split at
    double start = 0.0;
    double peak = 0.0;
};

namespace {

struct Frame {
    SystemState snapshot;
    int level = 0;
    int remaining = 0;     ///< killable retrials still to launch
    int parent_kill = 0;
    std::uint64_t serial = 0;
    std::uint64_t next_index = 0;
    double value = 0.0;
};

}  // namespace

std::string to_string(RunStatus status) {
    switch (status) {
        case RunStatus::converged: return "converged";
        case RunStatus::max_trials: return "max_trials";
        case RunStatus::wall_time: return "wall_time";
        case RunStatus::zero_hits: return "zero_hits";
        case RunStatus::invalid: return "invalid";
    }
    return "unknown";
}

TrialRunner::TrialRunner(const Model& model, ThresholdLadder ladder, MonitorMode mode,
                         thermo::kernels::Isa isa)
    : ladder_(std::move(ladder)), sim_(model, isa), monitor_(model, ladder_.line, ladder_.thresholds, mode) {
    ladder_.validate();
}

double TrialRunner::initial_value() {
    const SystemState s = sim_.initial_state(Rng({0}));
    return monitor_.value(sim_, s);
}

TrialRunner::PathEnd TrialRunner::run_path(Path& p, TrialOutcome& out, bool track_peak) {
    const auto m = static_cast<int>(ladder_.levels());
    const std::int64_t total = sim_.total_steps();
    for (;;) {
        const int level = monitor_.level(sim_, p.state);
        if (track_peak) p.peak = std::max(p.peak, monitor_.value(sim_, p.state));
        if (level > p.accounted) {
            if (p.accounted + 1 >= m) return PathEnd::hit;
            ++p.accounted;
            return PathEnd::split;
        }
        if (level < p.accounted) {
            p.accounted = level;
            if (level < p.kill_level) return PathEnd::killed;
        }
        if (p.state.step >= total) return PathEnd::finished;
        if (sim_.apply_due_events(p.state)) continue;
        thermo::kernels::Watch w = monitor_.watch(p.accounted);
        if (track_peak && monitor_.mode() == MonitorMode::temperature) w.peak = &p.peak;
        out.work_steps += sim_.integrate(p.state, sim_.next_event_step(p.state), w);
    }
}

TrialOutcome TrialRunner::run(std::uint64_t seed, std::int64_t trial, std::vector<PeakRecord>* peaks) {
    TrialOutcome out;
    const auto key = static_cast<std::uint64_t>(trial);
    const bool track = peaks != nullptr;
    const std::size_t peaks_before = track ? peaks->size() : 0;
    std::vector<Frame> frames;
    frames.reserve(ladder_.levels());

    Path p;
    p.state = sim_.initial_state(Rng({seed, key}));
    if (ladder_.levels() > 1 && monitor_.level(sim_, p.state) > 0) {
        throw LadderMismatch("initial monitored value already reaches the first threshold");
    }
    p.start = p.peak = monitor_.value(sim_, p.state);
    out.paths = 1;

    // Next retrial of the innermost frame; the last one continues the parent path.
    auto launch = [&] {
        Frame& f = frames.back();
        p.accounted = f.level;
        p.start = p.peak = f.value;
        ++out.paths;
        if (f.remaining > 0) {
            p.state = f.snapshot;
            sim_.reseed(p.state, Rng({seed, key, f.serial, f.next_index++}));
            p.kill_level = f.level;
            --f.remaining;
        } else {
            p.state = std::move(f.snapshot);
            p.kill_level = f.parent_kill;
            frames.pop_back();
        }
    };
    auto close = [&] {
        if (track) peaks->push_back(PeakRecord{p.start, p.peak});
    };

    std::uint64_t serial = 0;
    try {
        for (;;) {
            const PathEnd end = run_path(p, out, track);
            if (end == PathEnd::split) {
                const int n = ladder_.retrials[static_cast<std::size_t>(p.accounted)];
                if (n <= 1) continue;
                close();
                const double at = track ? monitor_.value(sim_, p.state) : 0.0;
                frames.push_back(Frame{std::move(p.state), p.accounted, n - 1, p.kill_level, serial++, 0, at});
                out.max_live_frames = std::max(out.max_live_frames, frames.size());
                launch();
                continue;
            }
            if (end == PathEnd::hit) ++out.hits;
            close();
            if (frames.empty()) break;
            launch();
        }
    } catch (const NonConvergence&) {
        out.aborted = true;
        out.hits = 0;
        if (track) peaks->resize(peaks_before);
    }
    return out;
}

double gamma_from_moments(std::int64_t hits, std::int64_t trials, double split_product) {
    if (trials <= 0) return 0.0;
    return static_cast<double>(hits) / (static_cast<double>(trials) * split_product);
}

double relative_error_from_moments(std::int64_t hits, std::int64_t hits_sq, std::int64_t trials) {
    if (hits <= 0 || trials <= 0) return std::numeric_limits<double>::infinity();
    const double h = static_cast<double>(hits);
    const double var = static_cast<double>(hits_sq) - h * h / static_cast<double>(trials);
    return std::sqrt(std::max(0.0, var)) / h;
}

EstimationResult restart_estimate(const Model& model, const ThresholdLadder& ladder,
                                  const EstimatorOptions& options) {
    model.validate();
    ladder.validate();
    if (!(options.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (options.max_trials < 1) throw std::invalid_argument("max_trials must be >= 1");

    const int workers = std::max(1, options.threads);
    std::vector<std::unique_ptr<TrialRunner>> runners;
    for (int w = 0; w < workers; ++w) {
        runners.push_back(std::make_unique<TrialRunner>(model, ladder, options.mode));
    }

    EstimationResult r;
    r.ladder = ladder;
    r.mode = options.mode;
    r.split_product = ladder.split_product();

    const auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };
    const std::int64_t batch = workers == 1 ? 1 : 16 * static_cast<std::int64_t>(workers);
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(batch));
    std::int64_t next_record = 1;
    std::int64_t next_trial = 0;
    bool stop = false;

    while (!stop) {
        std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
        detail::parallel_for(workers, 0, batch, [&](int w, std::int64_t i) {
            const auto wi = static_cast<std::size_t>(w);
            if (failures[wi]) return;
            try {
                outcomes[static_cast<std::size_t>(i)] = runners[wi]->run(options.seed, next_trial + i);
            } catch (...) {
                failures[wi] = std::current_exception();
            }
        });
        for (const std::exception_ptr& e : failures) {
            if (e) std::rethrow_exception(e);
        }

        for (const TrialOutcome& o : outcomes) {
            r.work_steps += o.work_steps;
            r.paths += o.paths;
            r.max_live_frames = std::max(r.max_live_frames, o.max_live_frames);
            if (o.aborted) {
                ++r.aborted;
                if (r.aborted >= options.max_trials) {
                    r.status = RunStatus::invalid;
                    stop = true;
                    break;
                }
                continue;
            }
            ++r.main_trials;
            r.hits += o.hits;
            r.hits_sq += o.hits * o.hits;
            r.per_trial_hits.push_back(static_cast<std::int32_t>(o.hits));
            r.gamma_hat = gamma_from_moments(r.hits, r.main_trials, r.split_product);
            r.relative_error = relative_error_from_moments(r.hits, r.hits_sq, r.main_trials);

            const bool done = r.main_trials >= options.min_trials &&
                              r.hits >= std::max<std::int64_t>(1, options.min_hits) &&
                              r.relative_error < options.epsilon;
            const bool capped = r.main_trials >= options.max_trials;
            const double now = (done || capped || options.record_trace ||
                                std::isfinite(options.max_wall_s)) ? elapsed() : 0.0;
            const bool timed_out = now >= options.max_wall_s;
            if (options.record_trace && (r.main_trials >= next_record || done || capped || timed_out)) {
                r.trace.push_back(TracePoint{r.main_trials, now, r.work_steps, r.gamma_hat, r.relative_error});
                next_record = std::max(next_record + 1, next_record + next_record / 100);
            }
            if (done || capped || timed_out) {
                r.status = done ? RunStatus::converged : capped ? RunStatus::max_trials : RunStatus::wall_time;
                stop = true;
                break;
            }
        }
        next_trial += batch;
    }

    r.wall_s = elapsed();
    if (r.hits == 0 && r.status != RunStatus::invalid) r.status = RunStatus::zero_hits;
    const auto attempted = static_cast<double>(r.main_trials + r.aborted);
    if (static_cast<double>(r.aborted) > 1e-3 * attempted) r.status = RunStatus::invalid;
    return r;
}

EstimationResult crude_estimate(const Model& model, std::size_t line, double target,
                                const EstimatorOptions& options) {
    return restart_estimate(model, ThresholdLadder::crude(line, target), options);
}

std::vector<double> temperature_path(const Model& model, std::size_t line, std::uint64_t seed,
                                     std::int64_t trial) {
    Simulator sim(model);
    SystemState s = sim.initial_state(Rng({seed, static_cast<std::uint64_t>(trial)}));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(sim.total_steps()) + 1);
    out.push_back(s.temps[line]);
    while (s.step < sim.total_steps()) {
        sim.apply_due_events(s);
        sim.integrate(s, s.step + 1);
        out.push_back(s.temps[line]);
    }
    return out;
}

}  // namespace linetherm::engine
