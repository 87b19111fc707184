#include "gammascan/vecmath/kernels.hpp"

namespace gammascan::kernels {
namespace {

double scalar_dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

double scalar_sumsq(std::span<const double> a) {
    double sum = 0.0;
    for (double x : a) sum += x * x;
    return sum;
}

void scalar_accumulate(std::span<double> acc, std::span<const double> v) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
}

}  // namespace

namespace detail {
const KernelOps scalar_ops{scalar_dot, scalar_sumsq, scalar_accumulate};
}

}  // namespace gammascan::kernels
