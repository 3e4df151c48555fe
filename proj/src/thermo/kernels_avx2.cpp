#include "linetherm/thermo_kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define LINETHERM_HAS_X86 1
#else
#define LINETHERM_HAS_X86 0
#endif

#include <stdexcept>

namespace linetherm::thermo::kernels::detail {

#if LINETHERM_HAS_X86

namespace {

__attribute__((target("avx2"))) inline __m256d rate4(__m256d t, __m256d c0, __m256d c1,
                                                    __m256d rad, __m256d inv) {
    const __m256d t2 = _mm256_mul_pd(t, t);
    const __m256d lin = _mm256_add_pd(c0, _mm256_mul_pd(c1, t));
    const __m256d quart = _mm256_mul_pd(rad, _mm256_mul_pd(t2, t2));
    return _mm256_mul_pd(_mm256_sub_pd(lin, quart), inv);
}

}  // namespace

__attribute__((target("avx2"))) std::int64_t advance_avx2(double* temps, const LaneBlock& block,
                                                          double dt, std::int64_t max_steps,
                                                          const Watch& watch) {
    const std::size_t groups = block.padded() / lane_width;
    const double* c0 = block.c0();
    const double* c1 = block.c1();
    const double* rad = block.rad();
    const double* inv = block.inv_rho();
    const __m256d vdt = _mm256_set1_pd(dt);
    const __m256d half = _mm256_set1_pd(0.5 * dt);
    const __m256d sixth = _mm256_set1_pd(dt / 6.0);
    const __m256d two = _mm256_set1_pd(2.0);

    std::int64_t step = 0;
    while (step < max_steps) {
        for (std::size_t g = 0; g < groups; ++g) {
            const std::size_t o = g * lane_width;
            const __m256d vc0 = _mm256_loadu_pd(c0 + o);
            const __m256d vc1 = _mm256_loadu_pd(c1 + o);
            const __m256d vrad = _mm256_loadu_pd(rad + o);
            const __m256d vinv = _mm256_loadu_pd(inv + o);
            const __m256d t = _mm256_loadu_pd(temps + o);

            const __m256d k1 = rate4(t, vc0, vc1, vrad, vinv);
            const __m256d k2 = rate4(_mm256_add_pd(t, _mm256_mul_pd(half, k1)), vc0, vc1, vrad, vinv);
            const __m256d k3 = rate4(_mm256_add_pd(t, _mm256_mul_pd(half, k2)), vc0, vc1, vrad, vinv);
            const __m256d k4 = rate4(_mm256_add_pd(t, _mm256_mul_pd(vdt, k3)), vc0, vc1, vrad, vinv);
            const __m256d sum = _mm256_add_pd(_mm256_add_pd(k1, k4),
                                              _mm256_mul_pd(two, _mm256_add_pd(k2, k3)));
            _mm256_storeu_pd(temps + o, _mm256_add_pd(t, _mm256_mul_pd(sixth, sum)));
        }
        ++step;
        const double w = temps[watch.lane];
        if (watch.peak != nullptr && w > *watch.peak) *watch.peak = w;
        if (w >= watch.upper || w < watch.lower) break;
    }
    return step;
}

bool avx2_compiled() { return true; }

#else

std::int64_t advance_avx2(double*, const LaneBlock&, double, std::int64_t, const Watch&) {
    throw std::logic_error("AVX2 kernel not available on this architecture");
}

bool avx2_compiled() { return false; }

#endif

}  // namespace linetherm::thermo::kernels::detail
