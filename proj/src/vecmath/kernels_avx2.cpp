// AVX2 kernel variants. This translation unit is compiled with -mavx2; the
// dispatcher only routes here after a cpuid check, so no AVX instruction
// executes on unsupported hardware.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "gammascan/vecmath/kernels.hpp"

namespace gammascan::kernels {
namespace {

// Horizontal reduction in a fixed lane order so results are deterministic.
inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);             // (l0+l2, l1+l3)
    const __m128d swapped = _mm_unpackhi_pd(pair, pair); // (l1+l3, l1+l3)
    return _mm_cvtsd_f64(_mm_add_sd(pair, swapped));     // (l0+l2)+(l1+l3)
}

double avx2_dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    std::size_t i = 0;
    __m256d acc = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_loadu_pd(a.data() + i);
        const __m256d vb = _mm256_loadu_pd(b.data() + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
    }
    double sum = hsum(acc);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

double avx2_sumsq(std::span<const double> a) {
    const std::size_t n = a.size();
    std::size_t i = 0;
    __m256d acc = _mm256_setzero_pd();
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_loadu_pd(a.data() + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(va, va));
    }
    double sum = hsum(acc);
    for (; i < n; ++i) sum += a[i] * a[i];
    return sum;
}

// Lane-wise adds only; bitwise identical to the scalar kernel.
void avx2_accumulate(std::span<double> acc, std::span<const double> v) {
    const std::size_t n = acc.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_loadu_pd(acc.data() + i);
        const __m256d vv = _mm256_loadu_pd(v.data() + i);
        _mm256_storeu_pd(acc.data() + i, _mm256_add_pd(va, vv));
    }
    for (; i < n; ++i) acc[i] += v[i];
}

}  // namespace

namespace detail {
const KernelOps avx2_ops{avx2_dot, avx2_sumsq, avx2_accumulate};
}

}  // namespace gammascan::kernels

#endif  // x86_64
