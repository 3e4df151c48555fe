// linetherm: command-line front end for the line temperature risk estimators.
//
//   linetherm run    --config scenarios/example_b.cfg [--mode restart] [--epsilon 0.05] ...
//   linetherm pilot  --config scenarios/example_a.cfg --out-dir out
//   linetherm report --config scenarios/example_b.cfg
//
// Exit codes: 0 when every requested estimate met epsilon, 1 when some did
// not, 2 for invalid input.

#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "linetherm/errors.hpp"
#include "linetherm/report.hpp"
#include "linetherm/run.hpp"
#include "linetherm/scenario.hpp"

namespace {

using namespace linetherm;

struct Args {
    std::string config;
    std::string out_dir = "out";
    std::optional<std::string> mode;
    std::optional<double> epsilon;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::int64_t> max_trials;
};

void add_common(CLI::App* cmd, Args& a, bool estimator_flags) {
    cmd->add_option("--config", a.config, "scenario file (JSON)")->required()->check(CLI::ExistingFile);
    if (!estimator_flags) return;
    cmd->add_option("--out-dir", a.out_dir, "directory for summary.tsv, trace.ndjson and ladders.tsv")
        ->capture_default_str();
    cmd->add_option("--mode", a.mode, "crude | restart | steady-state");
    cmd->add_option("--epsilon", a.epsilon, "target relative error");
    cmd->add_option("--seed", a.seed, "master seed");
    cmd->add_option("--threads", a.threads, "worker threads");
    cmd->add_option("--max-trials", a.max_trials, "cap on main trials per estimate");
}

cli::Scenario load(const Args& a) {
    cli::Scenario s = cli::load_scenario(a.config);
    for (std::size_t i = 0; i < s.row_corrections.size(); ++i) {
        if (std::abs(s.row_corrections[i] - 1.0) <= 1e-12) continue;
        std::fprintf(stderr, "note: wind transition row %zu summed to %.6f, renormalised\n", i,
                     s.row_corrections[i]);
    }
    cli::RunOverrides o;
    if (a.mode) {
        try {
            o.mode = cli::parse_mode(*a.mode);
        } catch (const std::invalid_argument& e) {
            throw ValidationError("mode", "expected crude, restart or steady-state");
        }
    }
    o.epsilon = a.epsilon;
    o.seed = a.seed;
    o.threads = a.threads;
    o.max_trials = a.max_trials;
    return cli::apply_overrides(std::move(s), o);
}

int cmd_run(const Args& a) {
    const cli::Scenario s = load(a);
    std::cout << cli::render_summary({});
    const cli::RunArtifacts out = cli::run(s, a.out_dir, &std::cout);
    std::cout << "summary: " << out.summary_path.string() << "\ntrace:   " << out.trace_path.string() << '\n';
    return out.all_met ? 0 : 1;
}

int cmd_pilot(const Args& a) {
    const cli::Scenario s = load(a);
    const cli::PilotArtifacts out = cli::pilot(s, a.out_dir, &std::cout);
    std::cout << "ladders: " << out.ladder_path.string() << '\n';
    for (const std::string& l : out.lines) {
        if (l.find("\terror: ") != std::string::npos) return 1;
    }
    return 0;
}

int cmd_report(const Args& a) {
    const cli::Scenario s = load(a);
    const cli::InitialReport r = cli::emit_initial_report(s);
    std::cout << cli::render_initial_report(r);
    return r.error.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transient line temperature risk estimation"};
    app.require_subcommand(1);
    Args args;
    CLI::App* run = app.add_subcommand("run", "estimate exceedance probabilities for every monitored threshold");
    CLI::App* pilot = app.add_subcommand("pilot", "build threshold ladders only");
    CLI::App* report = app.add_subcommand("report", "print the initial operating point");
    add_common(run, args, true);
    add_common(pilot, args, true);
    add_common(report, args, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(args);
        if (pilot->parsed()) return cmd_pilot(args);
        return cmd_report(args);
    } catch (const ValidationError& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
