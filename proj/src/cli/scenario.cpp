#include "linetherm/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "linetherm/errors.hpp"
#include "linetherm/units.hpp"

namespace linetherm::cli {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) { throw ValidationError(field, what); }

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& path) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& item : obj.items()) {
        if (!allowed.contains(item.key())) fail(at(path, item.key()), "unknown key");
    }
}

const json& need(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) fail(at(path, key), "missing");
    return obj.at(key);
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "must be finite");
    return v;
}

double number_or(const json& obj, const std::string& key, double fallback, const std::string& path) {
    return obj.contains(key) ? number(obj.at(key), at(path, key)) : fallback;
}

std::int64_t integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<std::int64_t>();
}

std::string text(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], at(path, i)));
    return out;
}

/// Kelvin number, or {"celsius": x} / {"kelvin": x}.
double temperature(const json& j, const std::string& path) {
    if (j.is_number()) return number(j, path);
    if (j.is_object() && j.size() == 1) {
        if (j.contains("celsius")) return units::celsius_to_kelvin(number(j.at("celsius"), at(path, "celsius")));
        if (j.contains("kelvin")) return number(j.at("kelvin"), at(path, "kelvin"));
    }
    fail(path, "expected kelvin or {\"celsius\": x} / {\"kelvin\": x}");
}

// One of <base>_s / <base>_min / <base>_h, converted to seconds.
std::optional<double> duration(const json& obj, const std::string& base, const std::string& path) {
    std::optional<double> out;
    const std::pair<const char*, double> suffixes[] = {{"_s", 1.0}, {"_min", 60.0}, {"_h", 3600.0}};
    for (const auto& [suffix, scale] : suffixes) {
        const std::string key = base + suffix;
        if (!obj.contains(key)) continue;
        if (out) fail(at(path, key), "given in more than one unit");
        out = number(obj.at(key), at(path, key)) * scale;
    }
    return out;
}

std::optional<std::vector<double>> durations(const json& obj, const std::string& base, const std::string& path) {
    std::optional<std::vector<double>> out;
    const std::pair<const char*, double> suffixes[] = {{"_s", 1.0}, {"_min", 60.0}, {"_h", 3600.0}};
    for (const auto& [suffix, scale] : suffixes) {
        const std::string key = base + suffix;
        if (!obj.contains(key)) continue;
        if (out) fail(at(path, key), "given in more than one unit");
        out = numbers(obj.at(key), at(path, key));
        for (double& v : *out) v *= scale;
    }
    return out;
}

// One of <base>_per_s / <base>_per_min / <base>_per_h, converted to 1/s.
std::optional<double> rate(const json& obj, const std::string& base, const std::string& path) {
    std::optional<double> out;
    const std::pair<const char*, double> suffixes[] = {{"_per_s", 1.0}, {"_per_min", 60.0}, {"_per_h", 3600.0}};
    for (const auto& [suffix, scale] : suffixes) {
        const std::string key = base + suffix;
        if (!obj.contains(key)) continue;
        if (out) fail(at(path, key), "given in more than one unit");
        out = number(obj.at(key), at(path, key)) / scale;
    }
    return out;
}

std::optional<std::vector<double>> rates(const json& obj, const std::string& base, const std::string& path) {
    std::optional<std::vector<double>> out;
    const std::pair<const char*, double> suffixes[] = {{"_per_s", 1.0}, {"_per_min", 60.0}, {"_per_h", 3600.0}};
    for (const auto& [suffix, scale] : suffixes) {
        const std::string key = base + suffix;
        if (!obj.contains(key)) continue;
        if (out) fail(at(path, key), "given in more than one unit");
        out = numbers(obj.at(key), at(path, key));
        for (double& v : *out) v /= scale;
    }
    return out;
}

std::set<std::string> with_units(std::set<std::string> keys, const std::string& base, bool is_rate) {
    const char* const time_suffixes[] = {"_s", "_min", "_h"};
    const char* const rate_suffixes[] = {"_per_s", "_per_min", "_per_h"};
    for (const char* s : is_rate ? rate_suffixes : time_suffixes) keys.insert(base + s);
    return keys;
}

thermo::ThermalLineParams conductor(const json& j, const std::string& path) {
    static const std::set<std::string> keys{"preset", "heat_capacity", "conv_coeff", "rad_coeff",
                                            "solar_gain", "ambient_temp", "ref_temp", "resist_temp_coeff",
                                            "ref_resistance_per_m", "reactance_per_m", "max_operating_temp"};
    check_keys(j, keys, path);
    thermo::ThermalLineParams p;
    if (j.contains("preset")) {
        const std::string preset = text(j.at("preset"), at(path, "preset"));
        if (preset != "drake") fail(at(path, "preset"), "unknown conductor preset '" + preset + "'");
        p = thermo::drake_conductor(1.0);
    }
    p.heat_capacity = number_or(j, "heat_capacity", p.heat_capacity, path);
    p.conv_coeff = number_or(j, "conv_coeff", p.conv_coeff, path);
    p.rad_coeff = number_or(j, "rad_coeff", p.rad_coeff, path);
    p.solar_gain = number_or(j, "solar_gain", p.solar_gain, path);
    p.resist_temp_coeff = number_or(j, "resist_temp_coeff", p.resist_temp_coeff, path);
    p.ref_resistance_per_m = number_or(j, "ref_resistance_per_m", p.ref_resistance_per_m, path);
    p.reactance_per_m = number_or(j, "reactance_per_m", p.reactance_per_m, path);
    if (j.contains("ambient_temp")) p.ambient_temp = temperature(j.at("ambient_temp"), at(path, "ambient_temp"));
    if (j.contains("ref_temp")) p.ref_temp = temperature(j.at("ref_temp"), at(path, "ref_temp"));
    if (j.contains("max_operating_temp")) {
        p.max_operating_temp = temperature(j.at("max_operating_temp"), at(path, "max_operating_temp"));
    }
    return p;
}

acpf::BusKind bus_kind(const json& j, const std::string& path) {
    const std::string k = text(j, path);
    if (k == "slack") return acpf::BusKind::slack;
    if (k == "pq") return acpf::BusKind::pq;
    fail(path, "bus kind must be 'slack' or 'pq'");
}

// Bus id -> index.
std::size_t bus_ref(const acpf::NetworkModel& net, const json& j, const std::string& path) {
    const auto id = integer(j, path);
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        if (net.buses[i].id == id) return i;
    }
    fail(path, "no bus with id " + std::to_string(id));
}

std::size_t line_ref(const acpf::NetworkModel& net, const json& j, const std::string& path) {
    const std::string name = text(j, path);
    for (std::size_t i = 0; i < net.branches.size(); ++i) {
        if (net.branches[i].name == name) return i;
    }
    fail(path, "no line named '" + name + "'");
}

void parse_network(const json& root, Scenario& s) {
    acpf::NetworkModel& net = s.model.network;
    net.base_power_mva = number(need(root, "base_power_mva", ""), "base_power_mva");
    if (!(net.base_power_mva > 0.0)) fail("base_power_mva", "must be > 0");
    net.base_voltage_kv = number_or(root, "base_voltage_kv", 0.0, "");
    if (net.base_voltage_kv < 0.0) fail("base_voltage_kv", "must be >= 0");

    const json& buses = need(root, "buses", "");
    if (!buses.is_array() || buses.empty()) fail("buses", "expected a non-empty array");
    std::set<int> ids;
    for (std::size_t i = 0; i < buses.size(); ++i) {
        const std::string path = at("buses", i);
        const json& b = buses[i];
        check_keys(b, {"id", "kind", "load_p_mw", "load_q_mvar", "load_p_pu", "load_q_pu", "voltage_pu"}, path);
        acpf::BusSpec spec;
        spec.id = static_cast<int>(integer(need(b, "id", path), at(path, "id")));
        if (!ids.insert(spec.id).second) fail(at(path, "id"), "duplicate bus id");
        spec.kind = bus_kind(need(b, "kind", path), at(path, "kind"));
        if (b.contains("load_p_mw") && b.contains("load_p_pu")) fail(at(path, "load_p_mw"), "given twice");
        if (b.contains("load_q_mvar") && b.contains("load_q_pu")) fail(at(path, "load_q_mvar"), "given twice");
        spec.load_p = b.contains("load_p_pu") ? number(b.at("load_p_pu"), at(path, "load_p_pu"))
                                              : number_or(b, "load_p_mw", 0.0, path) / net.base_power_mva;
        spec.load_q = b.contains("load_q_pu") ? number(b.at("load_q_pu"), at(path, "load_q_pu"))
                                              : number_or(b, "load_q_mvar", 0.0, path) / net.base_power_mva;
        spec.voltage = number_or(b, "voltage_pu", 1.0, path);
        if (!(spec.voltage > 0.0)) fail(at(path, "voltage_pu"), "must be > 0");
        net.buses.push_back(spec);
    }
    std::size_t slacks = 0;
    for (const acpf::BusSpec& b : net.buses) slacks += b.kind == acpf::BusKind::slack ? 1 : 0;
    if (slacks != 1) fail("buses", "exactly one slack bus required");

    std::map<std::string, thermo::ThermalLineParams> conductors;
    if (root.contains("conductors")) {
        const json& c = root.at("conductors");
        if (!c.is_object()) fail("conductors", "expected an object");
        for (const auto& item : c.items()) conductors[item.key()] = conductor(item.value(), at("conductors", item.key()));
    }

    const json& lines = need(root, "lines", "");
    if (!lines.is_array() || lines.empty()) fail("lines", "expected a non-empty array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string path = at("lines", i);
        const json& l = lines[i];
        check_keys(l, {"name", "from", "to", "length_m", "length_km", "conductor", "r_pu", "x_pu", "b_half_pu"},
                   path);
        acpf::Branch b;
        b.name = text(need(l, "name", path), at(path, "name"));
        if (!names.insert(b.name).second) fail(at(path, "name"), "duplicate line name");
        b.from = bus_ref(net, need(l, "from", path), at(path, "from"));
        b.to = bus_ref(net, need(l, "to", path), at(path, "to"));
        if (b.from == b.to) fail(at(path, "to"), "line must join two different buses");

        const json& cj = need(l, "conductor", path);
        if (cj.is_string()) {
            const auto it = conductors.find(cj.get<std::string>());
            if (it == conductors.end()) fail(at(path, "conductor"), "unknown conductor '" + cj.get<std::string>() + "'");
            b.thermal = it->second;
        } else {
            b.thermal = conductor(cj, at(path, "conductor"));
        }
        if (l.contains("length_m") == l.contains("length_km")) fail(at(path, "length_km"), "give exactly one of length_m, length_km");
        b.thermal.length = l.contains("length_m") ? number(l.at("length_m"), at(path, "length_m"))
                                                  : number(l.at("length_km"), at(path, "length_km")) * 1000.0;
        if (!(b.thermal.length > 0.0)) fail(at(path, "length_km"), "must be > 0");
        try {
            b.thermal.validate();
        } catch (const std::invalid_argument& e) {
            fail(at(path, "conductor"), e.what());
        }

        const bool derive = !l.contains("r_pu") || !l.contains("x_pu");
        if (derive && !(net.base_voltage_kv > 0.0)) {
            fail(at(path, "r_pu"), "per-unit impedance needs base_voltage_kv when not given explicitly");
        }
        const double zb = derive ? acpf::impedance_base_ohm(net) : 1.0;
        b.ref_resistance = l.contains("r_pu") ? number(l.at("r_pu"), at(path, "r_pu"))
                                              : b.thermal.ref_resistance_per_m * b.thermal.length / zb;
        b.reactance = l.contains("x_pu") ? number(l.at("x_pu"), at(path, "x_pu"))
                                         : b.thermal.reactance_per_m * b.thermal.length / zb;
        if (b.ref_resistance < 0.0) fail(at(path, "r_pu"), "must be >= 0");
        if (!(b.reactance > 0.0)) fail(at(path, "x_pu"), "must be > 0");
        b.shunt_susceptance_half = number_or(l, "b_half_pu", 0.0, path);
        b.current_resistance = b.ref_resistance;
        net.branches.push_back(std::move(b));
    }
    try {
        net.validate();
    } catch (const std::invalid_argument& e) {
        fail("lines", e.what());
    }
}

void parse_window(const json& root, Scenario& s) {
    const json& w = need(root, "window", "");
    check_keys(w, with_units(with_units(with_units({}, "t0", false), "te", false), "dt", false), "window");
    s.model.t0 = duration(w, "t0", "window").value_or(0.0);
    const auto te = duration(w, "te", "window");
    if (!te) fail("window.te_h", "missing");
    s.model.te = *te;
    s.model.dt = duration(w, "dt", "window").value_or(thermo::default_step_s);
    if (!(s.model.dt > 0.0)) fail("window.dt_s", "must be > 0");
    if (!(s.model.te > s.model.t0)) fail("window.te_h", "window must be nonempty");
    const double ratio = (s.model.te - s.model.t0) / s.model.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
        fail("window.dt_s", "window length must be a multiple of dt");
    }
}

void parse_clusters(const json& root, Scenario& s) {
    if (!root.contains("clusters")) return;
    const json& arr = root.at("clusters");
    if (!arr.is_array()) fail("clusters", "expected an array");
    std::set<std::string> keys{"name", "bus", "units", "cluster_size", "p_max_mw", "q_mvar", "initial_up_clusters"};
    keys = with_units(with_units(with_units(keys, "frequency", true), "lambda", true), "mu", true);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string path = at("clusters", i);
        const json& c = arr[i];
        check_keys(c, keys, path);
        engine::ClusterGroup g;
        g.name = text(need(c, "name", path), at(path, "name"));
        g.bus = bus_ref(s.model.network, need(c, "bus", path), at(path, "bus"));
        g.units.unit_count = static_cast<int>(integer(need(c, "units", path), at(path, "units")));
        g.units.cluster_size = c.contains("cluster_size")
                                   ? static_cast<int>(integer(c.at("cluster_size"), at(path, "cluster_size")))
                                   : 1;
        if (g.units.unit_count <= 0) fail(at(path, "units"), "must be > 0");
        if (g.units.cluster_size <= 0 || g.units.unit_count % g.units.cluster_size != 0) {
            fail(at(path, "cluster_size"), "must be positive and divide units");
        }
        g.units.p_max_mw = number(need(c, "p_max_mw", path), at(path, "p_max_mw"));
        g.units.q_mvar = number_or(c, "q_mvar", 0.0, path);
        const auto f = rate(c, "frequency", path);
        const auto lambda = rate(c, "lambda", path);
        const auto mu = rate(c, "mu", path);
        if (f) {
            if (lambda || mu) fail(at(path, "frequency_per_h"), "give either frequency or lambda/mu");
            if (!(*f > 0.0)) fail(at(path, "frequency_per_h"), "must be > 0");
            std::tie(g.units.up_to_down_rate, g.units.down_to_up_rate) = stoch::rates_for_target(*f);
        } else {
            if (!lambda) fail(at(path, "lambda_per_h"), "missing");
            if (!mu) fail(at(path, "mu_per_h"), "missing");
            g.units.up_to_down_rate = *lambda;
            g.units.down_to_up_rate = *mu;
        }
        if (!(g.units.up_to_down_rate > 0.0)) fail(at(path, "lambda_per_h"), "must be > 0");
        if (!(g.units.down_to_up_rate > 0.0)) fail(at(path, "mu_per_h"), "must be > 0");
        g.units.initial_up_clusters =
            c.contains("initial_up_clusters")
                ? static_cast<int>(integer(c.at("initial_up_clusters"), at(path, "initial_up_clusters")))
                : g.units.cluster_count() / 2;
        if (g.units.initial_up_clusters < 0 || g.units.initial_up_clusters > g.units.cluster_count()) {
            fail(at(path, "initial_up_clusters"), "must lie in [0, units / cluster_size]");
        }
        s.model.clusters.push_back(std::move(g));
    }
}

void parse_wind(const json& root, Scenario& s) {
    if (!root.contains("wind_farms")) return;
    const json& arr = root.at("wind_farms");
    if (!arr.is_array()) fail("wind_farms", "expected an array");
    std::set<std::string> keys{"name", "bus", "output_p_pu", "output_q_pu", "transition", "conv_coeff",
                               "couples_weather", "initial_state_index"};
    keys = with_units(keys, "sampling_frequency", true);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string path = at("wind_farms", i);
        const json& w = arr[i];
        check_keys(w, keys, path);
        engine::WindFarm farm;
        farm.name = text(need(w, "name", path), at(path, "name"));
        farm.bus = bus_ref(s.model.network, need(w, "bus", path), at(path, "bus"));
        std::vector<double> p = numbers(need(w, "output_p_pu", path), at(path, "output_p_pu"));
        std::vector<double> q = numbers(need(w, "output_q_pu", path), at(path, "output_q_pu"));
        if (q.size() != p.size()) fail(at(path, "output_q_pu"), "needs one entry per state");
        const json& tj = need(w, "transition", path);
        if (!tj.is_array() || tj.size() != p.size()) fail(at(path, "transition"), "needs one row per state");
        std::vector<double> matrix;
        for (std::size_t r = 0; r < tj.size(); ++r) {
            std::vector<double> row = numbers(tj[r], at(at(path, "transition"), r));
            if (row.size() != p.size()) fail(at(at(path, "transition"), r), "needs one entry per state");
            matrix.insert(matrix.end(), row.begin(), row.end());
        }
        std::vector<double> conv;
        if (w.contains("conv_coeff")) conv = numbers(w.at("conv_coeff"), at(path, "conv_coeff"));
        const auto nu = rate(w, "sampling_frequency", path);
        if (!nu) fail(at(path, "sampling_frequency_per_min"), "missing");
        const auto init = w.contains("initial_state_index")
                              ? integer(w.at("initial_state_index"), at(path, "initial_state_index"))
                              : 0;
        if (init < 0 || static_cast<std::size_t>(init) >= p.size()) {
            fail(at(path, "initial_state_index"), "out of range");
        }
        std::vector<double> corrections;
        try {
            farm.chain = stoch::WindChain::create(std::move(p), std::move(q), std::move(matrix), *nu, std::move(conv),
                                                  static_cast<std::size_t>(init), &corrections);
        } catch (const std::invalid_argument& e) {
            fail(at(path, "transition"), e.what());
        }
        s.row_corrections.insert(s.row_corrections.end(), corrections.begin(), corrections.end());
        farm.couples_weather = w.contains("couples_weather") ? w.at("couples_weather").get<bool>()
                                                             : !farm.chain.conv_coeff.empty();
        if (farm.couples_weather && farm.chain.conv_coeff.empty()) {
            fail(at(path, "conv_coeff"), "required when couples_weather is set");
        }
        s.model.wind_farms.push_back(std::move(farm));
    }
}

void parse_load(const json& root, Scenario& s) {
    if (!root.contains("load_curve")) return;
    const json& l = root.at("load_curve");
    check_keys(l, with_units(with_units({"levels", "hourly_levels"}, "starts", false), "end", false), "load_curve");
    stoch::LoadCurve curve;
    if (l.contains("hourly_levels")) {
        if (l.size() != 1) fail("load_curve.hourly_levels", "cannot be combined with explicit breakpoints");
        const std::vector<double> levels = numbers(l.at("hourly_levels"), "load_curve.hourly_levels");
        try {
            curve = stoch::hourly_curve(levels);
        } catch (const std::invalid_argument& e) {
            fail("load_curve.hourly_levels", e.what());
        }
    } else {
        const auto starts = durations(l, "starts", "load_curve");
        if (!starts) fail("load_curve.starts_h", "missing");
        const auto end = duration(l, "end", "load_curve");
        if (!end) fail("load_curve.end_h", "missing");
        curve.starts = *starts;
        curve.levels = numbers(need(l, "levels", "load_curve"), "load_curve.levels");
        curve.end = *end;
        try {
            curve.validate();
        } catch (const std::invalid_argument& e) {
            fail("load_curve", e.what());
        }
    }
    if (curve.starts.front() > s.model.t0 || curve.end < s.model.te) fail("load_curve", "must cover the whole window");
    s.model.load_curve = std::move(curve);
}

void parse_run(const json& root, Scenario& s) {
    if (!root.contains("run")) return;
    const json& r = root.at("run");
    check_keys(r, {"mode", "epsilon", "seed", "threads", "max_trials", "max_wall_s", "pilot_trials", "pilot_seed"},
               "run");
    RunSettings& rs = s.run;
    if (r.contains("mode")) {
        try {
            rs.mode = parse_mode(text(r.at("mode"), "run.mode"));
        } catch (const std::invalid_argument& e) {
            fail("run.mode", e.what());
        }
    }
    rs.epsilon = number_or(r, "epsilon", rs.epsilon, "run");
    if (!(rs.epsilon > 0.0 && rs.epsilon < 1.0)) fail("run.epsilon", "must lie in (0, 1)");
    if (r.contains("seed")) {
        if (!r.at("seed").is_number_unsigned()) fail("run.seed", "expected a non-negative integer");
        rs.seed = r.at("seed").get<std::uint64_t>();
    }
    if (r.contains("threads")) rs.threads = static_cast<int>(integer(r.at("threads"), "run.threads"));
    if (rs.threads < 1) fail("run.threads", "must be >= 1");
    if (r.contains("max_trials")) rs.max_trials = integer(r.at("max_trials"), "run.max_trials");
    if (rs.max_trials < 1) fail("run.max_trials", "must be >= 1");
    rs.max_wall_s = number_or(r, "max_wall_s", rs.max_wall_s, "run");
    if (!(rs.max_wall_s > 0.0)) fail("run.max_wall_s", "must be > 0");
    if (r.contains("pilot_trials")) rs.pilot_trials = integer(r.at("pilot_trials"), "run.pilot_trials");
    if (rs.pilot_trials < 100) fail("run.pilot_trials", "must be >= 100");
    if (r.contains("pilot_seed")) {
        if (!r.at("pilot_seed").is_number_unsigned()) fail("run.pilot_seed", "expected a non-negative integer");
        rs.pilot_seed = r.at("pilot_seed").get<std::uint64_t>();
    }
}

void parse_sweep(const json& root, Scenario& s) {
    if (!root.contains("sweep")) return;
    const json& w = root.at("sweep");
    check_keys(w, with_units({"group", "cluster_size"}, "frequency", true), "sweep");
    SweepSpec sweep;
    const std::string group = text(need(w, "group", "sweep"), "sweep.group");
    bool found = false;
    for (std::size_t g = 0; g < s.model.clusters.size(); ++g) {
        if (s.model.clusters[g].name == group) {
            sweep.group = g;
            found = true;
        }
    }
    if (!found) fail("sweep.group", "no cluster group named '" + group + "'");
    const auto f = rates(w, "frequency", "sweep");
    sweep.frequencies = f ? *f : std::vector<double>{s.model.clusters[sweep.group].units.frequency()};
    for (double v : sweep.frequencies) {
        if (!(v > 0.0)) fail("sweep.frequency_per_h", "must be > 0");
    }
    if (w.contains("cluster_size")) {
        const json& c = w.at("cluster_size");
        if (!c.is_array()) fail("sweep.cluster_size", "expected an array");
        for (std::size_t i = 0; i < c.size(); ++i) {
            const auto n = integer(c[i], at("sweep.cluster_size", i));
            if (n <= 0 || s.model.clusters[sweep.group].units.unit_count % n != 0) {
                fail(at("sweep.cluster_size", i), "must be positive and divide the unit count");
            }
            sweep.cluster_sizes.push_back(static_cast<int>(n));
        }
    } else {
        sweep.cluster_sizes = {s.model.clusters[sweep.group].units.cluster_size};
    }
    s.sweep = std::move(sweep);
}

void parse_monitors(const json& root, Scenario& s) {
    const json& arr = need(root, "monitor", "");
    if (!arr.is_array() || arr.empty()) fail("monitor", "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string path = at("monitor", i);
        check_keys(arr[i], {"line", "thresholds"}, path);
        MonitorSpec m;
        m.line = line_ref(s.model.network, need(arr[i], "line", path), at(path, "line"));
        const json& th = need(arr[i], "thresholds", path);
        if (!th.is_array() || th.empty()) fail(at(path, "thresholds"), "expected a non-empty array");
        for (std::size_t k = 0; k < th.size(); ++k) {
            const double t = temperature(th[k], at(at(path, "thresholds"), k));
            if (!m.thresholds.empty() && !(t > m.thresholds.back())) {
                fail(at(at(path, "thresholds"), k), "thresholds must be strictly increasing");
            }
            m.thresholds.push_back(t);
        }
        s.monitors.push_back(std::move(m));
    }
}

// Thresholds must lie above the line's temperature at t0.
void check_against_initial_state(const Scenario& s) {
    engine::SystemState init;
    try {
        engine::Simulator sim(s.model);
        init = sim.initial_state(Rng({0}));
    } catch (const Error& e) {
        fail("model", std::string("initial operating point: ") + e.what());
    }
    for (std::size_t i = 0; i < s.monitors.size(); ++i) {
        const MonitorSpec& m = s.monitors[i];
        for (std::size_t k = 0; k < m.thresholds.size(); ++k) {
            if (!(m.thresholds[k] > init.temps[m.line])) {
                fail(at(at(at("monitor", i), "thresholds"), k),
                     "threshold " + std::to_string(m.thresholds[k]) + " K is not above the initial temperature " +
                         std::to_string(init.temps[m.line]) + " K");
            }
        }
    }
}

json conductor_json(const thermo::ThermalLineParams& p) {
    return json{{"heat_capacity", p.heat_capacity},
                {"conv_coeff", p.conv_coeff},
                {"rad_coeff", p.rad_coeff},
                {"solar_gain", p.solar_gain},
                {"ambient_temp", p.ambient_temp},
                {"ref_temp", p.ref_temp},
                {"resist_temp_coeff", p.resist_temp_coeff},
                {"ref_resistance_per_m", p.ref_resistance_per_m},
                {"reactance_per_m", p.reactance_per_m},
                {"max_operating_temp", p.max_operating_temp}};
}

}  // namespace

std::string to_string(EstimatorMode mode) {
    switch (mode) {
        case EstimatorMode::crude: return "crude";
        case EstimatorMode::restart: return "restart";
        case EstimatorMode::steady_state: return "steady-state";
    }
    return "unknown";
}

EstimatorMode parse_mode(const std::string& t) {
    if (t == "crude") return EstimatorMode::crude;
    if (t == "restart") return EstimatorMode::restart;
    if (t == "steady-state" || t == "steady_state") return EstimatorMode::steady_state;
    throw std::invalid_argument("mode must be crude, restart or steady-state");
}

Scenario parse_scenario(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail("<file>", e.what());
    }
    std::set<std::string> top{"name",  "base_power_mva", "base_voltage_kv", "window", "resistance_update",
                              "conductors", "buses", "lines", "clusters", "wind_farms", "load_curve",
                              "initial_temperatures", "monitor", "run", "sweep"};
    check_keys(root, top, "");

    Scenario s;
    s.name = root.contains("name") ? text(root.at("name"), "name") : "scenario";
    parse_network(root, s);
    parse_window(root, s);
    if (root.contains("resistance_update")) {
        const std::string r = text(root.at("resistance_update"), "resistance_update");
        if (r == "on_event") {
            s.model.resistance_update = engine::ResistanceUpdate::on_event;
        } else if (r == "every_step") {
            s.model.resistance_update = engine::ResistanceUpdate::every_step;
        } else {
            fail("resistance_update", "must be 'on_event' or 'every_step'");
        }
    }
    parse_clusters(root, s);
    parse_wind(root, s);
    int coupled = 0;
    for (const engine::WindFarm& w : s.model.wind_farms) coupled += w.couples_weather ? 1 : 0;
    if (coupled > 1) fail("wind_farms", "at most one wind farm may set line weather");
    parse_load(root, s);
    if (root.contains("initial_temperatures")) {
        std::vector<double> t;
        const json& arr = root.at("initial_temperatures");
        if (!arr.is_array() || arr.size() != s.model.line_count()) {
            fail("initial_temperatures", "needs one entry per line");
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            t.push_back(temperature(arr[i], at("initial_temperatures", i)));
            if (!(t.back() > 0.0)) fail(at("initial_temperatures", i), "must be > 0 K");
        }
        s.model.initial_temperatures = std::move(t);
    }
    parse_monitors(root, s);
    parse_run(root, s);
    parse_sweep(root, s);
    try {
        s.model.validate();
    } catch (const std::invalid_argument& e) {
        fail("model", e.what());
    }
    check_against_initial_state(s);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("<file>", "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& s) {
    const engine::Model& m = s.model;
    const acpf::NetworkModel& net = m.network;
    json root;
    root["name"] = s.name;
    root["base_power_mva"] = net.base_power_mva;
    root["base_voltage_kv"] = net.base_voltage_kv;
    root["window"] = json{{"t0_s", m.t0}, {"te_s", m.te}, {"dt_s", m.dt}};
    root["resistance_update"] = m.resistance_update == engine::ResistanceUpdate::on_event ? "on_event" : "every_step";

    json buses = json::array();
    for (const acpf::BusSpec& b : net.buses) {
        buses.push_back(json{{"id", b.id},
                             {"kind", b.kind == acpf::BusKind::slack ? "slack" : "pq"},
                             {"load_p_pu", b.load_p},
                             {"load_q_pu", b.load_q},
                             {"voltage_pu", b.voltage}});
    }
    root["buses"] = std::move(buses);

    json lines = json::array();
    for (const acpf::Branch& b : net.branches) {
        thermo::ThermalLineParams p = b.thermal;
        lines.push_back(json{{"name", b.name},
                             {"from", net.buses[b.from].id},
                             {"to", net.buses[b.to].id},
                             {"length_m", p.length},
                             {"conductor", conductor_json(p)},
                             {"r_pu", b.ref_resistance},
                             {"x_pu", b.reactance},
                             {"b_half_pu", b.shunt_susceptance_half}});
    }
    root["lines"] = std::move(lines);

    json clusters = json::array();
    for (const engine::ClusterGroup& g : m.clusters) {
        clusters.push_back(json{{"name", g.name},
                                {"bus", net.buses[g.bus].id},
                                {"units", g.units.unit_count},
                                {"cluster_size", g.units.cluster_size},
                                {"p_max_mw", g.units.p_max_mw},
                                {"q_mvar", g.units.q_mvar},
                                {"lambda_per_s", g.units.up_to_down_rate},
                                {"mu_per_s", g.units.down_to_up_rate},
                                {"initial_up_clusters", g.units.initial_up_clusters}});
    }
    if (!clusters.empty()) root["clusters"] = std::move(clusters);

    json farms = json::array();
    for (const engine::WindFarm& w : m.wind_farms) {
        json rows = json::array();
        for (std::size_t i = 0; i < w.chain.state_count; ++i) {
            json row = json::array();
            for (std::size_t j = 0; j < w.chain.state_count; ++j) row.push_back(w.chain.p(i, j));
            rows.push_back(std::move(row));
        }
        farms.push_back(json{{"name", w.name},
                             {"bus", net.buses[w.bus].id},
                             {"output_p_pu", w.chain.output_p},
                             {"output_q_pu", w.chain.output_q},
                             {"transition", std::move(rows)},
                             {"sampling_frequency_per_s", w.chain.sampling_frequency},
                             {"conv_coeff", w.chain.conv_coeff},
                             {"couples_weather", w.couples_weather},
                             {"initial_state_index", w.chain.initial_state}});
    }
    if (!farms.empty()) root["wind_farms"] = std::move(farms);

    if (m.load_curve) {
        root["load_curve"] =
            json{{"starts_s", m.load_curve->starts}, {"levels", m.load_curve->levels}, {"end_s", m.load_curve->end}};
    }
    if (m.initial_temperatures) root["initial_temperatures"] = *m.initial_temperatures;

    json monitors = json::array();
    for (const MonitorSpec& mon : s.monitors) {
        monitors.push_back(json{{"line", net.branches[mon.line].name}, {"thresholds", mon.thresholds}});
    }
    root["monitor"] = std::move(monitors);

    json run{{"mode", to_string(s.run.mode)},
             {"epsilon", s.run.epsilon},
             {"seed", s.run.seed},
             {"threads", s.run.threads},
             {"max_trials", s.run.max_trials},
             {"pilot_trials", s.run.pilot_trials},
             {"pilot_seed", s.run.pilot_seed}};
    if (std::isfinite(s.run.max_wall_s)) run["max_wall_s"] = s.run.max_wall_s;
    root["run"] = std::move(run);

    if (s.sweep) {
        root["sweep"] = json{{"group", m.clusters[s.sweep->group].name},
                             {"frequency_per_s", s.sweep->frequencies},
                             {"cluster_size", s.sweep->cluster_sizes}};
    }
    return root.dump(2) + "\n";
}

std::string config_digest(const Scenario& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : serialize_scenario(s)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void set_cluster_regime(engine::Model& model, std::size_t group, double frequency, int cluster_size) {
    if (group >= model.clusters.size()) throw std::invalid_argument("cluster group out of range");
    stoch::TwoStateCluster& u = model.clusters[group].units;
    if (cluster_size <= 0 || u.unit_count % cluster_size != 0) {
        throw std::invalid_argument("cluster size must divide the unit count");
    }
    std::tie(u.up_to_down_rate, u.down_to_up_rate) = stoch::rates_for_target(frequency);
    u.cluster_size = cluster_size;
    u.initial_up_clusters = u.cluster_count() / 2;
}

std::vector<SweepPoint> expand_sweep(const Scenario& s) {
    std::vector<SweepPoint> out;
    if (!s.sweep) {
        const auto& units = s.model.clusters.empty() ? stoch::TwoStateCluster{} : s.model.clusters.front().units;
        out.push_back(SweepPoint{s.model.clusters.empty() ? 0.0 : units.frequency(), units.cluster_size, s});
        return out;
    }
    for (double f : s.sweep->frequencies) {
        for (int c : s.sweep->cluster_sizes) {
            SweepPoint p{f, c, s};
            p.scenario.sweep.reset();
            set_cluster_regime(p.scenario.model, s.sweep->group, f, c);
            out.push_back(std::move(p));
        }
    }
    return out;
}

InitialReport emit_initial_report(const Scenario& s) {
    InitialReport r;
    engine::Simulator sim(s.model);
    engine::SystemState st;
    try {
        st = sim.initial_state(Rng({0}));
    } catch (const Error& e) {
        r.error = e.what();
        return r;
    }
    r.converged = st.flow.converged;
    for (std::size_t i = 0; i < s.model.line_count(); ++i) {
        const acpf::Branch& b = s.model.network.branches[i];
        const thermo::Weather w = sim.weather(st, i);
        LineReport lr;
        lr.name = b.name;
        lr.temperature = st.temps[i];
        lr.current = sim.phase_current(st, i);
        for (const MonitorSpec& m : s.monitors) {
            if (m.line != i) continue;
            for (double t : m.thresholds) {
                lr.thresholds.push_back(t);
                lr.ampacities.push_back(thermo::ampacity_or_zero(t, b.thermal, w));
            }
        }
        lr.rating_ampacity = thermo::ampacity_or_zero(b.thermal.max_operating_temp, b.thermal, w);
        lr.margin = b.thermal.max_operating_temp - lr.temperature;
        r.lines.push_back(std::move(lr));
    }
    return r;
}

}  // namespace linetherm::cli
