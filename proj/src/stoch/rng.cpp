#include "linetherm/rng.hpp"

#include <cmath>
#include <vector>

namespace linetherm {

namespace {

std::mt19937_64 seeded(std::initializer_list<std::uint64_t> key) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * key.size());
    for (std::uint64_t k : key) {
        words.push_back(static_cast<std::uint32_t>(k));
        words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::initializer_list<std::uint64_t> key) : engine_(seeded(key)) {}

double Rng::exponential(double rate) { return exponential_quantile(uniform(), rate); }

double exponential_quantile(double u, double rate) { return -std::log1p(-u) / rate; }

}  // namespace linetherm
