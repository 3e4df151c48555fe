#pragma once

// Batched RK4 stepping of several conductor temperatures in lock step.
//
// Each lane integrates dT/dt = (c0 + c1 T - a_r T^4) / rho. Lanes are stored
// structure-of-arrays and padded to a multiple of `lane_width`. The scalar
// and AVX2 variants evaluate the same expression tree in the same order, so
// they agree bit for bit (the library is built with -ffp-contract=off).

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "linetherm/thermo.hpp"

namespace linetherm::thermo::kernels {

inline constexpr std::size_t lane_width = 4;

constexpr std::size_t padded_lanes(std::size_t n) {
    return (n + lane_width - 1) / lane_width * lane_width;
}

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);

/// Per-lane ODE coefficients. Padding lanes are inert (zero derivative).
class LaneBlock {
public:
    LaneBlock() = default;
    explicit LaneBlock(std::size_t lanes);

    std::size_t lanes() const noexcept { return lanes_; }
    std::size_t padded() const noexcept { return c0_.size(); }

    void set(std::size_t lane, const HeatSource& heat, const Cooling& cooling, double heat_capacity);

    const double* c0() const noexcept { return c0_.data(); }
    const double* c1() const noexcept { return c1_.data(); }
    const double* rad() const noexcept { return rad_.data(); }
    const double* inv_rho() const noexcept { return inv_rho_.data(); }

private:
    std::size_t lanes_ = 0;
    std::vector<double> c0_, c1_, rad_, inv_rho_;
};

/// Early-stop probe on one lane: stepping halts after the first step whose end
/// value leaves [lower, upper). `peak` receives the running maximum of that lane.
struct Watch {
    std::size_t lane = 0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    double* peak = nullptr;
};

/// Advances `temps` (size == block.padded()) by at most `max_steps` steps of `dt`.
/// Returns the number of steps taken. Throws NonFiniteState.
std::int64_t advance(Isa isa, std::span<double> temps, const LaneBlock& block, double dt,
                     std::int64_t max_steps, const Watch& watch = {});

/// Best variant supported by the running CPU.
Isa detect_isa();

/// Variant used by the library. Defaults to detect_isa(); LINETHERM_KERNEL=scalar
/// in the environment forces the reference path.
Isa active_isa();

namespace detail {
std::int64_t advance_scalar(double* temps, const LaneBlock& block, double dt,
                            std::int64_t max_steps, const Watch& watch);
std::int64_t advance_avx2(double* temps, const LaneBlock& block, double dt,
                          std::int64_t max_steps, const Watch& watch);
bool avx2_compiled();
}  // namespace detail

}  // namespace linetherm::thermo::kernels
