#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gammascan/gamma/gamma.hpp"

namespace gammascan::analysis {

enum class Rubric { QA, Coding };

// One human quality rating on the 0..5 scale.
struct Annotation {
    std::string record_id;
    std::string annotator_id;
    int score = 0;
    Rubric rubric = Rubric::QA;
};

// CSV with header record_id,annotator_id,score,rubric.
std::vector<Annotation> load_annotations_csv(const std::filesystem::path& path);

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
};

// Half-open bins [k*w, (k+1)*w) from zero through the largest value;
// counts always sum to the input size.
std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width);
std::vector<HistogramBin> histogram(std::span<const engine::GammaRecord> records, double bin_width);

struct JoinedRecord {
    const engine::GammaRecord* record = nullptr;
    double mean_score = 0.0;
    std::size_t annotator_count = 0;
};

struct JoinResult {
    std::vector<JoinedRecord> joined;
    std::vector<Annotation> dangling;            // record_id not in the run
    std::vector<std::string> unannotated_ids;    // records with no ratings
};

JoinResult join_annotations(std::span<const engine::GammaRecord> records,
                            std::span<const Annotation> annotations);

struct MeanWithError {
    double mean = 0.0;
    double stderr_ = 0.0;  // sample stdev / sqrt(n)
};

struct SummaryStats {
    MeanWithError gamma_all;
    MeanWithError rating_all;
    std::optional<MeanWithError> gamma_low;   // absent when n_low == 0
    std::optional<MeanWithError> rating_low;
    double threshold = 0.05;
    std::size_t n_total = 0;
    std::size_t n_low = 0;
};

SummaryStats summary_stats(std::span<const JoinedRecord> joined, double threshold = 0.05);

struct BinnedFit {
    double bin_width = 0.05;
    struct Bin {
        double center = 0.0;
        double mean_rating = 0.0;
        std::size_t count = 0;
    };
    std::vector<Bin> bins;  // nonempty bins only
    double slope_m = 0.0;
    double intercept_b = 0.0;
    bool weighted = true;
};

// Mean rating per gamma bin, then least squares of mean rating against
// bin center, weighted by bin count (unweighted available for ablation).
// Needs at least two nonempty bins.
BinnedFit binned_rating_fit(std::span<const JoinedRecord> joined, double bin_width = 0.05,
                            bool weighted = true);

// Least squares directly on (gamma, mean score) points, for comparison
// with the binned fit.
BinnedFit per_record_fit(std::span<const JoinedRecord> joined);

// Fleiss' kappa over score categories 0..5. Requires the same number of
// ratings (>= 2) for every record; throws DegenerateAgreement when the
// expected agreement is exactly 1.
double fleiss_kappa(std::span<const Annotation> annotations);

// "0.063(4)" notation: mean at `decimals` places, standard error in units
// of the last digit.
std::string format_uncertainty(double mean, double stderr_, int decimals);

}  // namespace gammascan::analysis
