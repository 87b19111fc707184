#include "gammascan/vecmath/kernels.hpp"

#include <atomic>
#include <string>

#include "gammascan/errors.hpp"

namespace gammascan::kernels {
namespace {

Backend detect_best() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2")) return Backend::Avx2;
#elif defined(__aarch64__) || defined(_M_ARM64)
    return Backend::Neon;
#endif
    return Backend::Scalar;
}

std::atomic<Backend>& active_slot() {
    static std::atomic<Backend> slot{detect_best()};
    return slot;
}

}  // namespace

bool available(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return true;
        case Backend::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Backend::Neon:
#if defined(__aarch64__) || defined(_M_ARM64)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Backend active_backend() { return active_slot().load(std::memory_order_relaxed); }

void force_backend(Backend b) {
    if (!available(b)) {
        throw ConfigError(std::string("kernel backend '") + std::string(backend_name(b)) +
                          "' is not available on this CPU");
    }
    active_slot().store(b, std::memory_order_relaxed);
}

const KernelOps& ops(Backend b) {
    if (!available(b)) {
        throw ConfigError(std::string("kernel backend '") + std::string(backend_name(b)) +
                          "' is not available on this CPU");
    }
    switch (b) {
        case Backend::Scalar:
            return detail::scalar_ops;
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::Avx2:
            return detail::avx2_ops;
#endif
#if defined(__aarch64__) || defined(_M_ARM64)
        case Backend::Neon:
            return detail::neon_ops;
#endif
        default:
            return detail::scalar_ops;
    }
}

std::string_view backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return "scalar";
        case Backend::Avx2:
            return "avx2";
        case Backend::Neon:
            return "neon";
    }
    return "unknown";
}

double dot(std::span<const double> a, std::span<const double> b) {
    return ops(active_backend()).dot(a, b);
}

double sumsq(std::span<const double> a) { return ops(active_backend()).sumsq(a); }

void accumulate(std::span<double> acc, std::span<const double> v) {
    ops(active_backend()).accumulate(acc, v);
}

}  // namespace gammascan::kernels
