#include "linetherm/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "linetherm/units.hpp"

namespace linetherm::cli {

namespace {

// Shortest text that parses back to the same double.
std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string fixed(double v, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

std::string summary_header() {
    return "line\tthreshold_K\tmode\tgamma_hat\trelative_error\tN\thits\taborted\tseed\twall_s\tdigest\tvariant\t"
           "status\twork_steps\tladder";
}

std::string format_summary_row_stable(const SummaryRow& r) {
    std::ostringstream o;
    o << r.line << '\t' << num(r.threshold) << '\t' << r.mode << '\t' << num(r.gamma_hat) << '\t'
      << num(r.relative_error) << '\t' << r.trials << '\t' << r.hits << '\t' << r.aborted << '\t' << r.seed
      << '\t' << r.digest << '\t' << r.variant << '\t' << r.status << '\t' << r.work_steps << '\t' << r.ladder;
    return o.str();
}

std::string format_summary_row(const SummaryRow& r) {
    std::ostringstream o;
    o << r.line << '\t' << num(r.threshold) << '\t' << r.mode << '\t' << num(r.gamma_hat) << '\t'
      << num(r.relative_error) << '\t' << r.trials << '\t' << r.hits << '\t' << r.aborted << '\t' << r.seed
      << '\t' << fixed(r.wall_s, 3) << '\t' << r.digest << '\t' << r.variant << '\t' << r.status << '\t'
      << r.work_steps << '\t' << r.ladder;
    return o.str();
}

std::string format_ladder(const engine::ThresholdLadder& l) {
    std::string out;
    for (std::size_t i = 0; i < l.levels(); ++i) {
        if (!out.empty()) out += ',';
        out += num(l.thresholds[i]) + ":" + std::to_string(l.retrials[i]);
    }
    return out;
}

SummaryRow make_row(const Scenario& s, const std::string& digest, const std::string& variant, std::size_t line,
                    double threshold, const engine::EstimationResult& r) {
    SummaryRow row;
    row.line = s.model.network.branches[line].name;
    row.threshold = threshold;
    row.mode = to_string(s.run.mode);
    row.gamma_hat = r.gamma_hat;
    row.relative_error = r.relative_error;
    row.trials = r.main_trials;
    row.hits = r.hits;
    row.aborted = r.aborted;
    row.seed = s.run.seed;
    row.wall_s = r.wall_s;
    row.digest = digest;
    row.variant = variant;
    row.status = engine::to_string(r.status);
    row.work_steps = r.work_steps;
    row.ladder = format_ladder(r.ladder);
    return row;
}

void write_trace(std::ostream& out, const SummaryRow& row, const std::vector<engine::TracePoint>& trace) {
    for (const engine::TracePoint& p : trace) {
        nlohmann::json j{{"line", row.line},
                         {"threshold_K", row.threshold},
                         {"mode", row.mode},
                         {"variant", row.variant},
                         {"trials", p.trials},
                         {"elapsed_s", p.elapsed_s},
                         {"work_steps", p.work_steps},
                         {"gamma_hat", p.gamma_hat},
                         {"relative_error", std::isfinite(p.relative_error) ? nlohmann::json(p.relative_error)
                                                                           : nlohmann::json(nullptr)}};
        out << j.dump() << '\n';
    }
}

std::string render_initial_report(const InitialReport& report) {
    std::ostringstream o;
    if (!report.error.empty()) {
        o << "power flow at t0 failed: " << report.error << '\n';
        return o.str();
    }
    for (const LineReport& l : report.lines) {
        o << "line " << l.name << ": " << fixed(units::kelvin_to_celsius(l.temperature), 2) << " degC, "
          << fixed(l.current, 1) << " A, rating " << fixed(l.rating_ampacity, 1) << " A, margin "
          << fixed(l.margin, 2) << " K\n";
        for (std::size_t i = 0; i < l.thresholds.size(); ++i) {
            o << "  ampacity at " << fixed(units::kelvin_to_celsius(l.thresholds[i]), 1) << " degC: "
              << fixed(l.ampacities[i], 1) << " A\n";
        }
    }
    return o.str();
}

std::string render_summary(const std::vector<SummaryRow>& rows) {
    std::ostringstream o;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-10s %-14s %9s %-12s %12s %9s %10s %9s  %s\n", "line", "variant", "T [degC]",
                  "mode", "gamma", "RE", "N", "wall [s]", "status");
    o << buf;
    for (const SummaryRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%-10s %-14s %9.2f %-12s %12.4e %9.4f %10lld %9.1f  %s\n", r.line.c_str(),
                      r.variant.c_str(), units::kelvin_to_celsius(r.threshold), r.mode.c_str(), r.gamma_hat,
                      r.relative_error, static_cast<long long>(r.trials), r.wall_s, r.status.c_str());
        o << buf;
    }
    return o.str();
}

}  // namespace linetherm::cli
