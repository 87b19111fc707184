#include "gammascan/vecmath/kernels.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "gammascan/errors.hpp"

using namespace gammascan;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) {
        x = scale * (static_cast<double>(rng()) / static_cast<double>(UINT64_MAX) - 0.5) * 2.0;
    }
    return v;
}

const std::vector<std::size_t> kDims = {1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 33, 64, 100, 257, 1536};

std::vector<kernels::Backend> simd_backends() {
    std::vector<kernels::Backend> out;
    if (kernels::available(kernels::Backend::Avx2)) out.push_back(kernels::Backend::Avx2);
    if (kernels::available(kernels::Backend::Neon)) out.push_back(kernels::Backend::Neon);
    return out;
}

}  // namespace

TEST_CASE("scalar backend is always available and active backend is valid") {
    CHECK(kernels::available(kernels::Backend::Scalar));
    CHECK(kernels::available(kernels::active_backend()));
}

TEST_CASE("simd dot and sumsq agree with the scalar reference") {
    const auto& scalar = kernels::ops(kernels::Backend::Scalar);
    std::mt19937_64 rng(42);
    for (auto backend : simd_backends()) {
        const auto& simd = kernels::ops(backend);
        for (std::size_t dim : kDims) {
            for (int rep = 0; rep < 20; ++rep) {
                const auto a = random_vector(rng, dim);
                const auto b = random_vector(rng, dim);
                const double ds = scalar.dot(a, b);
                const double dv = simd.dot(a, b);
                const double scale = std::max(1.0, std::abs(ds));
                CHECK(std::abs(ds - dv) <= 1e-12 * scale);

                const double ss = scalar.sumsq(a);
                const double sv = simd.sumsq(a);
                CHECK(std::abs(ss - sv) <= 1e-12 * std::max(1.0, ss));
            }
        }
    }
}

TEST_CASE("accumulate is bitwise identical across backends") {
    const auto& scalar = kernels::ops(kernels::Backend::Scalar);
    std::mt19937_64 rng(7);
    for (auto backend : simd_backends()) {
        const auto& simd = kernels::ops(backend);
        for (std::size_t dim : kDims) {
            auto acc_a = random_vector(rng, dim, 3.0);
            auto acc_b = acc_a;
            for (int step = 0; step < 10; ++step) {
                const auto v = random_vector(rng, dim);
                scalar.accumulate(acc_a, v);
                simd.accumulate(acc_b, v);
            }
            CHECK(acc_a == acc_b);
        }
    }
}

TEST_CASE("force_backend switches dispatch and rejects unsupported targets") {
    const kernels::Backend original = kernels::active_backend();
    kernels::force_backend(kernels::Backend::Scalar);
    CHECK(kernels::active_backend() == kernels::Backend::Scalar);

    bool any_unavailable = false;
    for (auto b : {kernels::Backend::Avx2, kernels::Backend::Neon}) {
        if (!kernels::available(b)) {
            any_unavailable = true;
            CHECK_THROWS_AS(kernels::force_backend(b), ConfigError);
        }
    }
    (void)any_unavailable;
    kernels::force_backend(original);
    CHECK(kernels::active_backend() == original);
}

TEST_CASE("dispatched entry points match the selected backend's table") {
    std::mt19937_64 rng(11);
    const auto a = random_vector(rng, 37);
    const auto b = random_vector(rng, 37);
    const auto& table = kernels::ops(kernels::active_backend());
    CHECK(kernels::dot(a, b) == table.dot(a, b));
    CHECK(kernels::sumsq(a) == table.sumsq(a));
}
