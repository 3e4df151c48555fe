#include "linetherm/acpf.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "linetherm/errors.hpp"

namespace linetherm::acpf {

namespace {

struct Admittance {
    Eigen::MatrixXd g;
    Eigen::MatrixXd b;
};

Admittance build_ybus(const NetworkModel& net) {
    const auto n = static_cast<Eigen::Index>(net.buses.size());
    Admittance y{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
    for (const Branch& br : net.branches) {
        const std::complex<double> ys = 1.0 / std::complex<double>(br.current_resistance, br.reactance);
        const auto f = static_cast<Eigen::Index>(br.from);
        const auto t = static_cast<Eigen::Index>(br.to);
        y.g(f, f) += ys.real();
        y.g(t, t) += ys.real();
        y.g(f, t) -= ys.real();
        y.g(t, f) -= ys.real();
        y.b(f, f) += ys.imag() + br.shunt_susceptance_half;
        y.b(t, t) += ys.imag() + br.shunt_susceptance_half;
        y.b(f, t) -= ys.imag();
        y.b(t, f) -= ys.imag();
    }
    return y;
}

void computed_power(const Admittance& y, const std::vector<double>& vm, const std::vector<double>& va,
                    Eigen::VectorXd& p, Eigen::VectorXd& q) {
    const auto n = y.g.rows();
    p.setZero(n);
    q.setZero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double pi = 0.0;
        double qi = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            const double gik = y.g(i, k);
            const double bik = y.b(i, k);
            if (gik == 0.0 && bik == 0.0) continue;
            const double th = va[i] - va[k];
            const double c = std::cos(th);
            const double s = std::sin(th);
            pi += vm[k] * (gik * c + bik * s);
            qi += vm[k] * (gik * s - bik * c);
        }
        p(i) = vm[i] * pi;
        q(i) = vm[i] * qi;
    }
}

}  // namespace

void NetworkModel::validate() const {
    if (!(base_power_mva > 0.0)) throw std::invalid_argument("base_power_mva must be > 0");
    if (buses.empty()) throw std::invalid_argument("network has no buses");
    const auto slacks = std::count_if(buses.begin(), buses.end(),
                                      [](const BusSpec& b) { return b.kind == BusKind::slack; });
    if (slacks != 1) throw std::invalid_argument("network needs exactly one slack bus");
    for (const Branch& br : branches) {
        if (br.from >= buses.size() || br.to >= buses.size() || br.from == br.to) {
            throw std::invalid_argument("branch " + br.name + " has invalid endpoints");
        }
        if (!(br.reactance > 0.0)) throw std::invalid_argument("branch " + br.name + " needs x > 0");
        if (br.ref_resistance < 0.0) throw std::invalid_argument("branch " + br.name + " needs r >= 0");
    }
    // connectivity over all branches
    std::vector<bool> seen(buses.size(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (const Branch& br : branches) {
            std::size_t v = buses.size();
            if (br.from == u) v = br.to;
            if (br.to == u) v = br.from;
            if (v < buses.size() && !seen[v]) {
                seen[v] = true;
                stack.push_back(v);
            }
        }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw std::invalid_argument("network graph is not connected");
    }
}

std::size_t NetworkModel::slack_index() const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].kind == BusKind::slack) return i;
    }
    throw std::invalid_argument("network has no slack bus");
}

std::size_t NetworkModel::bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].id == id) return i;
    }
    throw std::invalid_argument("unknown bus id " + std::to_string(id));
}

PowerFlowSolution solve_power_flow(const NetworkModel& net, std::span<const BusInjection> injections,
                                   const PowerFlowSolution* warm_start) {
    const std::size_t n = net.buses.size();
    if (injections.size() != n) throw std::invalid_argument("one injection per bus required");
    const std::size_t slack = net.slack_index();

    PowerFlowSolution sol;
    if (warm_start != nullptr && warm_start->voltage.size() == n) {
        sol.voltage = warm_start->voltage;
        sol.angle = warm_start->angle;
    } else {
        sol.voltage.assign(n, 1.0);
        sol.angle.assign(n, 0.0);
    }
    sol.voltage[slack] = net.buses[slack].voltage;
    sol.angle[slack] = 0.0;

    // unknown ordering: angles of every non-slack bus, then their magnitudes
    std::vector<Eigen::Index> pq;
    for (std::size_t i = 0; i < n; ++i) {
        if (i != slack) pq.push_back(static_cast<Eigen::Index>(i));
    }
    const auto npq = static_cast<Eigen::Index>(pq.size());
    if (npq == 0) {
        sol.converged = true;
        return sol;
    }

    const Admittance y = build_ybus(net);
    Eigen::VectorXd p, q;
    Eigen::VectorXd mismatch(2 * npq);
    Eigen::MatrixXd jac(2 * npq, 2 * npq);

    for (int iter = 0; iter <= max_iterations; ++iter) {
        computed_power(y, sol.voltage, sol.angle, p, q);
        for (Eigen::Index a = 0; a < npq; ++a) {
            const auto i = pq[a];
            mismatch(a) = injections[i].p - p(i);
            mismatch(npq + a) = injections[i].q - q(i);
        }
        sol.max_mismatch = mismatch.cwiseAbs().maxCoeff();
        sol.iterations = iter;
        if (!std::isfinite(sol.max_mismatch)) break;
        if (sol.max_mismatch < mismatch_tolerance) {
            sol.converged = true;
            return sol;
        }
        if (iter == max_iterations) break;

        for (Eigen::Index a = 0; a < npq; ++a) {
            const auto i = pq[a];
            const double vi = sol.voltage[i];
            for (Eigen::Index c = 0; c < npq; ++c) {
                const auto k = pq[c];
                if (i == k) {
                    jac(a, c) = -q(i) - y.b(i, i) * vi * vi;
                    jac(a, npq + c) = p(i) / vi + y.g(i, i) * vi;
                    jac(npq + a, c) = p(i) - y.g(i, i) * vi * vi;
                    jac(npq + a, npq + c) = q(i) / vi - y.b(i, i) * vi;
                } else {
                    const double th = sol.angle[i] - sol.angle[k];
                    const double s = std::sin(th);
                    const double co = std::cos(th);
                    const double gs_bc = y.g(i, k) * s - y.b(i, k) * co;
                    const double gc_bs = y.g(i, k) * co + y.b(i, k) * s;
                    const double vk = sol.voltage[k];
                    jac(a, c) = vi * vk * gs_bc;
                    jac(a, npq + c) = vi * gc_bs;
                    jac(npq + a, c) = -vi * vk * gc_bs;
                    jac(npq + a, npq + c) = vi * gs_bc;
                }
            }
        }
        const Eigen::VectorXd dx = jac.partialPivLu().solve(mismatch);
        for (Eigen::Index a = 0; a < npq; ++a) {
            sol.angle[pq[a]] += dx(a);
            sol.voltage[pq[a]] += dx(npq + a);
        }
    }
    throw NonConvergence("power flow did not converge (max mismatch " +
                         std::to_string(sol.max_mismatch) + " p.u. after " +
                         std::to_string(sol.iterations) + " iterations)");
}

std::vector<BusInjection> computed_injections(const NetworkModel& net, const PowerFlowSolution& sol) {
    const Admittance y = build_ybus(net);
    Eigen::VectorXd p, q;
    computed_power(y, sol.voltage, sol.angle, p, q);
    std::vector<BusInjection> out(net.buses.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = {p(static_cast<Eigen::Index>(i)), q(static_cast<Eigen::Index>(i))};
    }
    return out;
}

double max_bus_mismatch(const NetworkModel& net, std::span<const BusInjection> injections,
                        const PowerFlowSolution& sol) {
    const auto calc = computed_injections(net, sol);
    const std::size_t slack = net.slack_index();
    double worst = 0.0;
    for (std::size_t i = 0; i < calc.size(); ++i) {
        if (i == slack) continue;
        worst = std::max({worst, std::abs(injections[i].p - calc[i].p),
                          std::abs(injections[i].q - calc[i].q)});
    }
    return worst;
}

double line_loss_pu(double v_from, double v_to, double angle_diff, double r, double x) {
    return r / (r * r + x * x) *
           (v_from * v_from + v_to * v_to - 2.0 * v_from * v_to * std::cos(angle_diff));
}

double line_loss_pu(const PowerFlowSolution& sol, const Branch& b) {
    return line_loss_pu(sol.voltage[b.from], sol.voltage[b.to], sol.angle[b.from] - sol.angle[b.to],
                        b.current_resistance, b.reactance);
}

double joule_w_per_m(double loss_pu, const Branch& b, double base_power_mva) {
    return loss_pu * base_power_mva * 1e6 / (3.0 * b.thermal.length);
}

double joule_w_per_m(const PowerFlowSolution& sol, const Branch& b, double base_power_mva) {
    return joule_w_per_m(line_loss_pu(sol, b), b, base_power_mva);
}

double resistance_pu_at(const Branch& b, double kelvin) {
    return b.ref_resistance * (1.0 + b.thermal.resist_temp_coeff * (kelvin - b.thermal.ref_temp));
}

void refresh_resistances(NetworkModel& net, std::span<const double> temps) {
    if (temps.size() < net.branches.size()) {
        throw std::invalid_argument("one temperature per branch required");
    }
    for (std::size_t i = 0; i < net.branches.size(); ++i) {
        net.branches[i].current_resistance = resistance_pu_at(net.branches[i], temps[i]);
    }
}

double impedance_base_ohm(const NetworkModel& net) {
    return net.base_voltage_kv * net.base_voltage_kv / net.base_power_mva;
}

}  // namespace linetherm::acpf
