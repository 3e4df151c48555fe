#include "linetherm/thermo_kernels.hpp"

namespace linetherm::thermo::kernels::detail {

namespace {

inline double rate(double t, double c0, double c1, double rad, double inv_rho) {
    const double t2 = t * t;
    return ((c0 + c1 * t) - rad * (t2 * t2)) * inv_rho;
}

}  // namespace

std::int64_t advance_scalar(double* temps, const LaneBlock& block, double dt,
                            std::int64_t max_steps, const Watch& watch) {
    const std::size_t n = block.lanes();
    const double* c0 = block.c0();
    const double* c1 = block.c1();
    const double* rad = block.rad();
    const double* inv = block.inv_rho();
    const double half = 0.5 * dt;
    const double sixth = dt / 6.0;
    const double two = 2.0;

    std::int64_t step = 0;
    while (step < max_steps) {
        for (std::size_t i = 0; i < n; ++i) {
            const double t = temps[i];
            const double k1 = rate(t, c0[i], c1[i], rad[i], inv[i]);
            const double k2 = rate(t + half * k1, c0[i], c1[i], rad[i], inv[i]);
            const double k3 = rate(t + half * k2, c0[i], c1[i], rad[i], inv[i]);
            const double k4 = rate(t + dt * k3, c0[i], c1[i], rad[i], inv[i]);
            temps[i] = t + sixth * ((k1 + k4) + two * (k2 + k3));
        }
        ++step;
        const double w = temps[watch.lane];
        if (watch.peak != nullptr && w > *watch.peak) *watch.peak = w;
        if (w >= watch.upper || w < watch.lower) break;
    }
    return step;
}

}  // namespace linetherm::thermo::kernels::detail
