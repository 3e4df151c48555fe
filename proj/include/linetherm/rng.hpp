#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace linetherm {

/// Random stream used by one simulated path.
///
/// Streams are keyed by a path of integers (seed, main-trial index, split
/// serial, retrial index, ...) through std::seed_seq, so any retrial can be
/// reproduced from its key alone. Variates are built from raw engine output
/// (no std:: distributions) to stay bit-identical across standard libraries.
class Rng {
public:
    Rng() : Rng({0}) {}
    explicit Rng(std::initializer_list<std::uint64_t> key);

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Exponential variate with the given rate via inverse transform.
    double exponential(double rate);

    bool operator==(const Rng&) const = default;

private:
    std::mt19937_64 engine_;
};

/// Inverse-transform exponential quantile: -ln(1 - u) / rate.
double exponential_quantile(double u, double rate);

}  // namespace linetherm
