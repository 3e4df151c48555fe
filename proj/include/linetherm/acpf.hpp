#pragma once

// Pi-equivalent network model and polar Newton-Raphson AC power flow.
// Quantities are per unit on the network base unless noted.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "linetherm/thermo.hpp"

namespace linetherm::acpf {

enum class BusKind { slack, pq };

struct BusSpec {
    int id = 0;
    BusKind kind = BusKind::pq;
    double load_p = 0.0;  ///< peak real load, p.u.
    double load_q = 0.0;  ///< peak reactive load, p.u.
    double voltage = 1.0; ///< slack voltage magnitude, p.u.

    bool operator==(const BusSpec&) const = default;
};

struct Branch {
    std::string name;
    std::size_t from = 0;  ///< bus index
    std::size_t to = 0;    ///< bus index
    double ref_resistance = 0.0;          ///< r_ref, p.u.
    double reactance = 0.0;               ///< x, p.u.
    double shunt_susceptance_half = 0.0;  ///< B/2 at each end, p.u.
    thermo::ThermalLineParams thermal;
    double current_resistance = 0.0;      ///< r(T), p.u.

    bool operator==(const Branch&) const = default;
};

struct NetworkModel {
    double base_power_mva = 100.0;
    double base_voltage_kv = 0.0;
    std::vector<BusSpec> buses;
    std::vector<Branch> branches;

    /// Exactly one slack bus, positive reactances, connected graph. Throws std::invalid_argument.
    void validate() const;
    std::size_t slack_index() const;
    std::size_t bus_index(int id) const;

    bool operator==(const NetworkModel&) const = default;
};

/// Net specified injection (generation minus load) at a bus.
struct BusInjection {
    double p = 0.0;
    double q = 0.0;
};

struct PowerFlowSolution {
    std::vector<double> voltage;  ///< magnitude per bus, p.u.
    std::vector<double> angle;    ///< rad per bus; slack is 0
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;

    bool operator==(const PowerFlowSolution&) const = default;
};

inline constexpr double mismatch_tolerance = 1e-8;
inline constexpr int max_iterations = 50;

/// Full Newton-Raphson on the polar mismatch equations. Flat start unless
/// `warm_start` is given. The slack entry of `injections` is ignored.
/// Throws NonConvergence after max_iterations.
PowerFlowSolution solve_power_flow(const NetworkModel& net, std::span<const BusInjection> injections,
                                   const PowerFlowSolution* warm_start = nullptr);

/// Bus power mismatch (specified minus computed), slack excluded; max abs value.
double max_bus_mismatch(const NetworkModel& net, std::span<const BusInjection> injections,
                        const PowerFlowSolution& sol);

/// Net real/reactive injection computed from the solved voltages at each bus.
std::vector<BusInjection> computed_injections(const NetworkModel& net, const PowerFlowSolution& sol);

/// Three-phase series Joule loss of a branch, evaluated with its current resistance.
double line_loss_pu(double v_from, double v_to, double angle_diff, double r, double x);
double line_loss_pu(const PowerFlowSolution& sol, const Branch& b);

/// Per-conductor Joule loss per metre, q S_B / (3 length).
double joule_w_per_m(double loss_pu, const Branch& b, double base_power_mva);
double joule_w_per_m(const PowerFlowSolution& sol, const Branch& b, double base_power_mva);

/// r(T) = r_ref [1 + alpha (T - T_ref)] for the branch's conductor.
double resistance_pu_at(const Branch& b, double kelvin);

/// Sets every branch current_resistance from its temperature (one per branch).
void refresh_resistances(NetworkModel& net, std::span<const double> temps);

/// Impedance base in ohms.
double impedance_base_ohm(const NetworkModel& net);

}  // namespace linetherm::acpf
