#include "gammascan/vecmath/vecmath.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gammascan/errors.hpp"
#include "gammascan/vecmath/kernels.hpp"

namespace gammascan::vec {
namespace {

void require_same_dim(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw DimensionMismatch("vector dims differ: " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
    }
}

double require_nonzero_norm(const EmbeddingVector& v, const char* role) {
    const double n = v.norm();
    if (n == 0.0) throw ZeroVector(std::string(role) + " vector has zero norm");
    return n;
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw EmptyInput("embedding vector must have dim >= 1");
    for (double x : values_) {
        if (!std::isfinite(x)) throw InvalidValue("embedding vector has a non-finite component");
    }
}

double EmbeddingVector::norm() const { return std::sqrt(kernels::sumsq(values_)); }

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    require_same_dim(a, b);
    const double na = require_nonzero_norm(a, "first");
    const double nb = require_nonzero_norm(b, "second");
    const double c = kernels::dot(a.values(), b.values()) / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

SineAngle sine_angle_flagged(const EmbeddingVector& a, const EmbeddingVector& b) {
    const double c = cosine(a, b);
    return SineAngle{std::sqrt(1.0 - c * c), c < 0.0};
}

double sine_angle(const EmbeddingVector& a, const EmbeddingVector& b) {
    return sine_angle_flagged(a, b).sine;
}

EmbeddingVector sum_vectors(std::span<const EmbeddingVector> vs) {
    if (vs.empty()) throw EmptyInput("sum_vectors requires at least one vector");
    std::vector<double> acc(vs.front().dim(), 0.0);
    for (const auto& v : vs) {
        if (v.dim() != acc.size()) {
            throw DimensionMismatch("sum_vectors: vector dims differ: " +
                                    std::to_string(acc.size()) + " vs " + std::to_string(v.dim()));
        }
        kernels::accumulate(acc, v.values());
    }
    return EmbeddingVector(std::move(acc));
}

double cone_angle_deg(std::span<const EmbeddingVector> vs) {
    if (vs.empty()) throw EmptyInput("cone_angle_deg requires at least one vector");

    const std::size_t dim = vs.front().dim();
    std::vector<std::vector<double>> units;
    units.reserve(vs.size());
    std::vector<double> mean(dim, 0.0);
    for (const auto& v : vs) {
        if (v.dim() != dim) {
            throw DimensionMismatch("cone_angle_deg: vector dims differ: " + std::to_string(dim) +
                                    " vs " + std::to_string(v.dim()));
        }
        const double n = require_nonzero_norm(v, "input");
        kernels::accumulate(mean, v.values());
        std::vector<double> u(v.values().begin(), v.values().end());
        for (double& x : u) x /= n;
        units.push_back(std::move(u));
    }

    // Axis = the mean of the raw vectors, normalized; long vectors pull
    // the cone axis toward themselves.
    const double mean_norm = std::sqrt(kernels::sumsq(mean));
    if (mean_norm == 0.0) throw ZeroVector("mean of input vectors has zero norm");
    for (double& x : mean) x /= mean_norm;

    double max_rad = 0.0;
    std::vector<double> diff(dim), sum(dim);
    for (const auto& u : units) {
        for (std::size_t i = 0; i < dim; ++i) {
            diff[i] = u[i] - mean[i];
            sum[i] = u[i] + mean[i];
        }
        const double rad =
            2.0 * std::atan2(std::sqrt(kernels::sumsq(diff)), std::sqrt(kernels::sumsq(sum)));
        max_rad = std::max(max_rad, rad);
    }
    return max_rad * 180.0 / std::numbers::pi;
}

}  // namespace gammascan::vec
