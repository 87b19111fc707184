#pragma once

#include <span>
#include <string_view>

namespace gammascan::kernels {

// Inner-loop arithmetic behind the vector geometry. A scalar reference
// implementation is always present; wider variants are picked at runtime
// from CPU capabilities and every variant is equivalence-tested against
// the reference.
//
// accumulate() adds vector components in place and performs no horizontal
// reduction, so its result is bitwise identical across backends. dot() and
// sumsq() reduce across the dimension and may reassociate; backends agree
// to ~1e-15 relative, and the selection is stable for a given process.
enum class Backend { Scalar, Avx2, Neon };

struct KernelOps {
    double (*dot)(std::span<const double> a, std::span<const double> b);
    double (*sumsq)(std::span<const double> a);
    void (*accumulate)(std::span<double> acc, std::span<const double> v);
};

bool available(Backend b);
Backend active_backend();

// Pins the backend for this process; throws ConfigError when unsupported
// on the current CPU. Intended for tests and the --kernels CLI switch.
void force_backend(Backend b);

const KernelOps& ops(Backend b);
std::string_view backend_name(Backend b);

// Dispatch through the active backend. Sizes must already match.
double dot(std::span<const double> a, std::span<const double> b);
double sumsq(std::span<const double> a);
void accumulate(std::span<double> acc, std::span<const double> v);

namespace detail {
extern const KernelOps scalar_ops;
#if defined(__x86_64__) || defined(_M_X64)
extern const KernelOps avx2_ops;
#endif
#if defined(__aarch64__) || defined(_M_ARM64)
extern const KernelOps neon_ops;
#endif
}  // namespace detail

}  // namespace gammascan::kernels
