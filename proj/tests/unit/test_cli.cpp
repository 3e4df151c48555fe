#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "../common/toys.hpp"
#include "linetherm/errors.hpp"
#include "linetherm/report.hpp"
#include "linetherm/run.hpp"
#include "linetherm/scenario.hpp"

using namespace linetherm;
using namespace linetherm::cli;
namespace fs = std::filesystem;

namespace {

fs::path source(const std::string& rel) { return fs::path(LINETHERM_SOURCE_DIR) / rel; }

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

/// Parses `text` after applying `edit` to its JSON and returns the failing field.
template <class Edit>
std::string field_error(const fs::path& base, Edit edit) {
    nlohmann::json j = nlohmann::json::parse(read_file(base));
    edit(j);
    try {
        parse_scenario(j.dump());
    } catch (const ValidationError& e) {
        return e.field();
    }
    return "<accepted>";
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("linetherm_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("shipped scenarios load") {
    const Scenario a = load_scenario(source("scenarios/example_a.cfg"));
    CHECK(a.model.line_count() == 1);
    CHECK(a.model.total_steps() == 12 * 720);
    REQUIRE(a.sweep);
    CHECK(a.sweep->frequencies.size() == 5);
    CHECK(a.sweep->cluster_sizes == std::vector<int>{1, 2, 3, 5});
    CHECK(a.monitors.at(0).thresholds == std::vector<double>{373.15});

    const Scenario b = load_scenario(source("scenarios/example_b.cfg"));
    CHECK(b.model.line_count() == 7);
    CHECK(b.model.network.buses.size() == 5);
    CHECK(b.model.total_steps() == 4 * 720);
    REQUIRE(b.model.wind_farms.size() == 1);
    CHECK(b.model.wind_farms[0].chain.state_count == 8);
    // one row of the transition table does not sum to one and was rescaled
    int corrected = 0;
    for (double r : b.row_corrections) corrected += std::abs(r - 1.0) > 1e-12 ? 1 : 0;
    CHECK(corrected == 1);
    CHECK(b.monitors.size() == 3);
}

TEST_CASE("serialisation round trip and digest") {
    for (const char* f : {"scenarios/example_a.cfg", "scenarios/example_b.cfg"}) {
        const Scenario s = load_scenario(source(f));
        const std::string text = serialize_scenario(s);
        const Scenario back = parse_scenario(text);
        CHECK(back == s);
        CHECK(serialize_scenario(back) == text);
        CHECK(config_digest(back) == config_digest(s));
        CHECK(config_digest(s).size() == 16);
    }
    const Scenario a = load_scenario(source("scenarios/example_a.cfg"));
    Scenario a2 = a;
    a2.run.seed += 1;
    CHECK(config_digest(a2) != config_digest(a));
}

TEST_CASE("validation names the offending field") {
    const fs::path b = source("scenarios/example_b.cfg");
    CHECK(field_error(b, [](auto&) {}) == "<accepted>");
    CHECK(field_error(b, [](auto& j) { j["colour"] = 1; }) == "colour");
    CHECK(field_error(b, [](auto& j) { j["lines"][2]["conductr"] = "drake"; }) == "lines[2].conductr");
    CHECK(field_error(b, [](auto& j) { j["lines"][0]["x_pu"] = -0.1; }) == "lines[0].x_pu");
    CHECK(field_error(b, [](auto& j) { j["window"]["dt_s"] = 7; }) == "window.dt_s");
    CHECK(field_error(b, [](auto& j) { j["buses"][0]["kind"] = "pq"; }) == "buses");
    CHECK(field_error(b, [](auto& j) { j["clusters"][0]["cluster_size"] = 3; }) == "clusters[0].cluster_size");
    CHECK(field_error(b, [](auto& j) { j["wind_farms"][0]["initial_state_index"] = 8; }) ==
          "wind_farms[0].initial_state_index");
    CHECK(field_error(b, [](auto& j) { j["wind_farms"][0]["transition"][3].erase(0); }) ==
          "wind_farms[0].transition[3]");
    CHECK(field_error(b, [](auto& j) { j["lines"][1]["conductor"] = "linnet"; }) == "lines[1].conductor");

    // Thresholds must lie above the line's temperature at t0 (about 43 C here).
    const std::string f = field_error(b, [](auto& j) {
        j["monitor"][0]["thresholds"] = nlohmann::json::array({nlohmann::json{{"celsius", 30}}});
    });
    CHECK(f.rfind("monitor[0].thresholds", 0) == 0);
    CHECK(field_error(b, [](auto& j) { j["monitor"][0]["line"] = "9-9"; }).rfind("monitor[0]", 0) == 0);

    Scenario s = load_scenario(b);
    RunOverrides o;
    o.epsilon = 1.5;
    CHECK_THROWS_AS(apply_overrides(s, o), ValidationError);
    o = {};
    o.threads = 0;
    CHECK_THROWS_AS(apply_overrides(s, o), ValidationError);
    o = {};
    o.mode = EstimatorMode::crude;
    o.seed = 77;
    const Scenario t = apply_overrides(s, o);
    CHECK(t.run.mode == EstimatorMode::crude);
    CHECK(t.run.seed == 77);
    CHECK_THROWS(parse_mode("fast"));
    CHECK(parse_mode("steady-state") == EstimatorMode::steady_state);
}

TEST_CASE("sweep expansion") {
    const Scenario a = load_scenario(source("scenarios/example_a.cfg"));
    const std::vector<SweepPoint> pts = expand_sweep(a);
    REQUIRE(pts.size() == 20);
    CHECK(pts[0].frequency == doctest::Approx(0.01 / 3600.0));
    CHECK(pts[0].cluster_size == 1);
    CHECK(pts[1].cluster_size == 2);
    CHECK(pts[4].frequency == doctest::Approx(pts[0].frequency * std::sqrt(10.0)).epsilon(1e-6));
    for (const SweepPoint& p : pts) {
        const stoch::TwoStateCluster& u = p.scenario.model.clusters[0].units;
        CHECK(u.cluster_size == p.cluster_size);
        CHECK(u.cluster_count() * u.cluster_size == 60);
        CHECK(u.up_to_down_rate == doctest::Approx(2.0 * p.frequency));
        CHECK(u.frequency() == doctest::Approx(p.frequency));
        CHECK(2 * u.initial_up_clusters <= u.cluster_count() + 1);
        CHECK(2 * u.initial_up_clusters >= u.cluster_count() - 1);
    }
    const Scenario b = load_scenario(source("scenarios/example_b.cfg"));
    CHECK(expand_sweep(b).size() == 1);
}

TEST_CASE("initial operating point report") {
    const Scenario b = load_scenario(source("scenarios/example_b.cfg"));
    const InitialReport r = emit_initial_report(b);
    CHECK(r.converged);
    CHECK(r.error.empty());
    REQUIRE(r.lines.size() == 7);
    for (const LineReport& l : r.lines) {
        CHECK(l.temperature < 373.15);
        CHECK(l.temperature > 313.15);
        CHECK(l.margin == doctest::Approx(373.15 - l.temperature));
    }
    CHECK(r.lines[0].name == "1-2");
    CHECK(r.lines[0].thresholds.size() == 7);
    CHECK(r.lines[0].ampacities.size() == 7);
    const std::string text = render_initial_report(r);
    CHECK(text.find("1-2") != std::string::npos);

    // No flow: the line sits at the solar-heated equilibrium; calm weather rating.
    nlohmann::json j = nlohmann::json::parse(read_file(source("scenarios/example_b.cfg")));
    for (auto& bus : j["buses"]) {
        bus["load_p_mw"] = 0;
        bus["load_q_mvar"] = 0;
    }
    j["clusters"] = nlohmann::json::array();
    j["wind_farms"][0]["output_p_pu"] = std::vector<double>(8, 0.0);
    j["wind_farms"][0]["output_q_pu"] = std::vector<double>(8, 0.0);
    j["wind_farms"][0]["initial_state_index"] = 0;
    j.erase("load_curve");
    j["monitor"] = nlohmann::json::array({nlohmann::json{{"line", "1-2"},
                                                         {"thresholds", {nlohmann::json{{"celsius", 100}}}}}});
    const InitialReport idle = emit_initial_report(parse_scenario(j.dump()));
    REQUIRE(idle.lines.size() == 7);
    // charging current of the shunts is small but nonzero
    CHECK(idle.lines[3].temperature == doctest::Approx(324.2213014589617).epsilon(1e-3));
    CHECK(idle.lines[0].rating_ampacity == doctest::Approx(844.1165376367419).epsilon(1e-9));
}

TEST_CASE("summary rows") {
    SummaryRow r;
    r.line = "1-2";
    r.threshold = 373.15;
    r.mode = "crude";
    r.gamma_hat = 0.25;
    r.relative_error = 0.04;
    r.trials = 1000;
    r.hits = 250;
    r.seed = 3;
    r.wall_s = 1.25;
    r.digest = "0123456789abcdef";
    r.variant = "-";
    r.status = "converged";
    r.ladder = "373.15:1";
    const std::string row = format_summary_row(r);
    const std::string head = summary_header();
    CHECK(std::count(row.begin(), row.end(), '\t') == std::count(head.begin(), head.end(), '\t'));
    SummaryRow later = r;
    later.wall_s = 9.0;
    CHECK(format_summary_row_stable(later) == format_summary_row_stable(r));
    CHECK(format_summary_row(later) != row);

    engine::ThresholdLadder l;
    l.thresholds = {340.0, 373.15};
    l.retrials = {1, 7};
    CHECK(format_ladder(l) == "340:1,373.15:7");
}

TEST_CASE("run writes deterministic summaries and a parsable trace") {
    const toys::RepairRace race = toys::repair_race(0.1);
    Scenario s = parse_scenario(toys::repair_race_json(0.1, 4.0, 80.0, 0));
    s.run.mode = EstimatorMode::crude;
    s.run.epsilon = 0.1;
    s.run.seed = 5;

    const fs::path d1 = scratch_dir("run1"), d2 = scratch_dir("run2");
    const RunArtifacts a = run(s, d1);
    const RunArtifacts b = run(s, d2);
    REQUIRE(a.rows.size() == 1);
    CHECK(a.all_met);
    CHECK(a.rows[0].status == "converged");
    CHECK(std::abs(a.rows[0].gamma_hat - race.gamma) < 3.5 * a.rows[0].relative_error * a.rows[0].gamma_hat);
    CHECK(format_summary_row_stable(a.rows[0]) == format_summary_row_stable(b.rows[0]));

    const std::vector<std::string> summary = lines_of(read_file(a.summary_path));
    REQUIRE(summary.size() == 2);
    CHECK(summary[0] == summary_header());
    const std::vector<std::string> trace = lines_of(read_file(a.trace_path));
    REQUIRE(!trace.empty());
    std::int64_t last = 0;
    for (const std::string& t : trace) {
        const nlohmann::json j = nlohmann::json::parse(t);
        CHECK(j.at("trials").get<std::int64_t>() > last);
        last = j.at("trials").get<std::int64_t>();
    }
    CHECK(last == a.rows[0].trials);

    // pilot-only run
    s.run.mode = EstimatorMode::restart;
    const PilotArtifacts p = pilot(s, d1);
    REQUIRE(p.lines.size() == 1);
    CHECK(fs::exists(p.ladder_path));
    fs::remove_all(d1);
    fs::remove_all(d2);
}
