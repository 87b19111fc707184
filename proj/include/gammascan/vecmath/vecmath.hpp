#pragma once

#include <span>
#include <vector>

namespace gammascan::vec {

// Fixed-dimension real vector holding a text embedding. Construction
// validates that the vector is nonempty and every component is finite.
class EmbeddingVector {
public:
    explicit EmbeddingVector(std::vector<double> values);

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& data() const noexcept { return values_; }

    double norm() const;

    friend bool operator==(const EmbeddingVector& a, const EmbeddingVector& b) {
        return a.values_ == b.values_;
    }

private:
    std::vector<double> values_;
};

// dot(a,b) / (|a||b|), clamped into [-1, 1] so round-off cannot push the
// magnitude above one.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct SineAngle {
    double sine;              // sqrt(1 - cos^2), in [0, 1]
    bool negative_cosine;     // set when the angle exceeds 90 degrees
};

// sine of the angle between a and b. sqrt(1 - cos^2) folds angles beyond
// 90 degrees back toward zero; the flag marks those so callers can warn.
SineAngle sine_angle_flagged(const EmbeddingVector& a, const EmbeddingVector& b);
double sine_angle(const EmbeddingVector& a, const EmbeddingVector& b);

// Componentwise sum, accumulated strictly in input order so repeated runs
// produce bit-identical results.
EmbeddingVector sum_vectors(std::span<const EmbeddingVector> vs);

// Maximum angle in degrees between any vector and the normalized mean of
// the set. Angles are computed with the 2*atan2(|u-w|, |u+w|) form, which
// stays accurate for both tiny and wide cones.
double cone_angle_deg(std::span<const EmbeddingVector> vs);

}  // namespace gammascan::vec
