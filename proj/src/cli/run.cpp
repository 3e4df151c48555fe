#include "linetherm/run.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "linetherm/errors.hpp"

namespace linetherm::cli {

namespace {

std::string variant_label(const Scenario& s, const SweepPoint& p) {
    if (!s.sweep) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, "f=%g/h,C=%d", p.frequency * 3600.0, p.cluster_size);
    return buf;
}

engine::ThresholdLadder ladder_for(const Scenario& s, std::size_t line, double target) {
    try {
        return engine::pilot_run(s.model, line, target, pilot_options(s));
    } catch (const LadderMismatch&) {
        return engine::ThresholdLadder::crude(line, target);
    } catch (const InsufficientSignal&) {
        return engine::ThresholdLadder::crude(line, target);
    }
}

engine::EstimationResult estimate(const Scenario& s, std::size_t line, double threshold) {
    const engine::EstimatorOptions opts = estimator_options(s);
    switch (s.run.mode) {
        case EstimatorMode::crude:
            return engine::crude_estimate(s.model, line, threshold, opts);
        case EstimatorMode::restart:
            return engine::restart_estimate(s.model, ladder_for(s, line, threshold), opts);
        case EstimatorMode::steady_state: {
            const double t[] = {threshold};
            return engine::steady_state_exceedance_estimate(s.model, line, t, opts, pilot_options(s)).front();
        }
    }
    throw std::logic_error("unhandled estimator mode");
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

}  // namespace

engine::EstimatorOptions estimator_options(const Scenario& s) {
    engine::EstimatorOptions o;
    o.epsilon = s.run.epsilon;
    o.max_trials = s.run.max_trials;
    o.max_wall_s = s.run.max_wall_s;
    o.seed = s.run.seed;
    o.threads = s.run.threads;
    o.mode = s.run.mode == EstimatorMode::steady_state ? engine::MonitorMode::steady_state_current
                                                        : engine::MonitorMode::temperature;
    return o;
}

engine::PilotOptions pilot_options(const Scenario& s) {
    engine::PilotOptions o;
    o.trials = s.run.pilot_trials;
    o.seed = s.run.pilot_seed;
    o.threads = s.run.threads;
    o.mode = s.run.mode == EstimatorMode::steady_state ? engine::MonitorMode::steady_state_current
                                                        : engine::MonitorMode::temperature;
    return o;
}

Scenario apply_overrides(Scenario s, const RunOverrides& o) {
    if (o.mode) s.run.mode = *o.mode;
    if (o.epsilon) {
        if (!(*o.epsilon > 0.0 && *o.epsilon < 1.0)) throw ValidationError("epsilon", "must lie in (0, 1)");
        s.run.epsilon = *o.epsilon;
    }
    if (o.seed) s.run.seed = *o.seed;
    if (o.threads) {
        if (*o.threads < 1) throw ValidationError("threads", "must be >= 1");
        s.run.threads = *o.threads;
    }
    if (o.max_trials) {
        if (*o.max_trials < 1) throw ValidationError("max-trials", "must be >= 1");
        s.run.max_trials = *o.max_trials;
    }
    return s;
}

RunArtifacts run(const Scenario& s, const std::filesystem::path& out_dir, std::ostream* log) {
    std::filesystem::create_directories(out_dir);
    RunArtifacts a;
    a.summary_path = out_dir / "summary.tsv";
    a.trace_path = out_dir / "trace.ndjson";
    std::ofstream summary = open_out(a.summary_path);
    std::ofstream trace = open_out(a.trace_path);
    summary << summary_header() << '\n' << std::flush;

    const std::string digest = config_digest(s);
    for (const SweepPoint& point : expand_sweep(s)) {
        const std::string variant = variant_label(s, point);
        for (const MonitorSpec& m : point.scenario.monitors) {
            for (double threshold : m.thresholds) {
                SummaryRow row;
                engine::EstimationResult result;
                try {
                    result = estimate(point.scenario, m.line, threshold);
                    row = make_row(point.scenario, digest, variant, m.line, threshold, result);
                } catch (const std::exception& e) {
                    row = make_row(point.scenario, digest, variant, m.line, threshold, result);
                    row.gamma_hat = std::numeric_limits<double>::quiet_NaN();
                    row.status = std::string("error: ") + e.what();
                }
                a.all_met = a.all_met && result.met_epsilon(point.scenario.run.epsilon);
                summary << format_summary_row(row) << '\n' << std::flush;
                write_trace(trace, row, result.trace);
                if (log != nullptr) *log << render_summary({row}).substr(render_summary({}).size()) << std::flush;
                a.rows.push_back(std::move(row));
                a.results.push_back(std::move(result));
            }
        }
    }
    return a;
}

PilotArtifacts pilot(const Scenario& s, const std::filesystem::path& out_dir, std::ostream* log) {
    std::filesystem::create_directories(out_dir);
    PilotArtifacts a;
    a.ladder_path = out_dir / "ladders.tsv";
    std::ofstream out = open_out(a.ladder_path);
    out << "variant\tline\ttarget_K\tlevels\tladder\tstatus\n";
    for (const SweepPoint& point : expand_sweep(s)) {
        const std::string variant = variant_label(s, point);
        for (const MonitorSpec& m : point.scenario.monitors) {
            for (double threshold : m.thresholds) {
                const std::string& name = point.scenario.model.network.branches[m.line].name;
                char head[128];
                std::snprintf(head, sizeof head, "%s\t%s\t%.17g\t", variant.c_str(), name.c_str(), threshold);
                std::string line = head;
                try {
                    const engine::ThresholdLadder l = engine::pilot_run(point.scenario.model, m.line, threshold,
                                                                        pilot_options(point.scenario));
                    line += std::to_string(l.levels()) + "\t" + format_ladder(l) + "\tok";
                } catch (const std::exception& e) {
                    line += "0\t-\terror: " + std::string(e.what());
                }
                out << line << '\n' << std::flush;
                if (log != nullptr) *log << line << '\n';
                a.lines.push_back(std::move(line));
            }
        }
    }
    return a;
}

}  // namespace linetherm::cli
