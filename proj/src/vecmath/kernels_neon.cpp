// NEON kernel variants for aarch64. NEON is architecturally guaranteed
// there, so availability reduces to the compile-time check.

#if defined(__aarch64__) || defined(_M_ARM64)

#include <arm_neon.h>

#include "gammascan/vecmath/kernels.hpp"

namespace gammascan::kernels {
namespace {

double neon_dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    std::size_t i = 0;
    float64x2_t acc = vdupq_n_f64(0.0);
    for (; i + 2 <= n; i += 2) {
        const float64x2_t va = vld1q_f64(a.data() + i);
        const float64x2_t vb = vld1q_f64(b.data() + i);
        acc = vaddq_f64(acc, vmulq_f64(va, vb));
    }
    double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

double neon_sumsq(std::span<const double> a) {
    const std::size_t n = a.size();
    std::size_t i = 0;
    float64x2_t acc = vdupq_n_f64(0.0);
    for (; i + 2 <= n; i += 2) {
        const float64x2_t va = vld1q_f64(a.data() + i);
        acc = vaddq_f64(acc, vmulq_f64(va, va));
    }
    double sum = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) sum += a[i] * a[i];
    return sum;
}

void neon_accumulate(std::span<double> acc, std::span<const double> v) {
    const std::size_t n = acc.size();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t va = vld1q_f64(acc.data() + i);
        const float64x2_t vv = vld1q_f64(v.data() + i);
        vst1q_f64(acc.data() + i, vaddq_f64(va, vv));
    }
    for (; i < n; ++i) acc[i] += v[i];
}

}  // namespace

namespace detail {
const KernelOps neon_ops{neon_dot, neon_sumsq, neon_accumulate};
}

}  // namespace gammascan::kernels

#endif  // aarch64
