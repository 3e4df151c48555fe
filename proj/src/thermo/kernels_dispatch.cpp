#include <cmath>
#include <cstdlib>
#include <string>

#include "linetherm/errors.hpp"
#include "linetherm/thermo_kernels.hpp"

namespace linetherm::thermo::kernels {

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "unknown";
}

LaneBlock::LaneBlock(std::size_t lanes)
    : lanes_(lanes),
      c0_(padded_lanes(lanes), 0.0),
      c1_(padded_lanes(lanes), 0.0),
      rad_(padded_lanes(lanes), 0.0),
      inv_rho_(padded_lanes(lanes), 0.0) {}

void LaneBlock::set(std::size_t lane, const HeatSource& heat, const Cooling& cooling,
                    double heat_capacity) {
    const double ta = cooling.ambient_temp;
    const double ta2 = ta * ta;
    c0_[lane] = heat.base + cooling.solar_gain + cooling.conv_coeff * ta +
                cooling.rad_coeff * (ta2 * ta2);
    c1_[lane] = heat.slope - cooling.conv_coeff;
    rad_[lane] = cooling.rad_coeff;
    inv_rho_[lane] = 1.0 / heat_capacity;
}

std::int64_t advance(Isa isa, std::span<double> temps, const LaneBlock& block, double dt,
                     std::int64_t max_steps, const Watch& watch) {
    if (temps.size() != block.padded()) {
        throw std::invalid_argument("temperature buffer must match padded lane count");
    }
    if (block.lanes() == 0 || max_steps <= 0) return 0;

    const std::int64_t taken = isa == Isa::avx2
                                   ? detail::advance_avx2(temps.data(), block, dt, max_steps, watch)
                                   : detail::advance_scalar(temps.data(), block, dt, max_steps, watch);

    for (std::size_t i = 0; i < block.lanes(); ++i) {
        if (!std::isfinite(temps[i])) {
            throw NonFiniteState("conductor temperature became non-finite in lane " +
                                 std::to_string(i));
        }
    }
    return taken;
}

Isa detect_isa() {
#if defined(__x86_64__) || defined(_M_X64)
    if (detail::avx2_compiled() && __builtin_cpu_supports("avx2")) return Isa::avx2;
#endif
    return Isa::scalar;
}

Isa active_isa() {
    static const Isa isa = [] {
        if (const char* env = std::getenv("LINETHERM_KERNEL"); env != nullptr) {
            if (std::string_view(env) == "scalar") return Isa::scalar;
        }
        return detect_isa();
    }();
    return isa;
}

}  // namespace linetherm::thermo::kernels
