#include "gammascan/analysis/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "gammascan/errors.hpp"

namespace gammascan::analysis {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    // The annotation schema has no quoted fields; a plain split suffices.
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

MeanWithError mean_with_error(std::span<const double> xs) {
    MeanWithError out;
    const double n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / n;
    if (xs.size() < 2) {
        out.stderr_ = 0.0;
        return out;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    return out;
}

struct FitPoint {
    double x, y, w;
};

// Weighted ordinary least squares for y = m*x + b.
std::pair<double, double> wls(const std::vector<FitPoint>& pts) {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : pts) {
        sw += p.w;
        sx += p.w * p.x;
        sy += p.w * p.y;
        sxx += p.w * p.x * p.x;
        sxy += p.w * p.x * p.y;
    }
    const double denom = sw * sxx - sx * sx;
    if (denom == 0.0) throw InsufficientBins("fit is degenerate: no spread in x");
    const double m = (sw * sxy - sx * sy) / denom;
    const double b = (sy - m * sx) / sw;
    return {m, b};
}

}  // namespace

std::vector<Annotation> load_annotations_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open annotations file " + path.string());
    std::vector<Annotation> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("record_id", 0) == 0) continue;  // header
        const auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw ConfigError("annotations line " + std::to_string(line_no) +
                              ": expected record_id,annotator_id,score,rubric");
        }
        Annotation a;
        a.record_id = fields[0];
        a.annotator_id = fields[1];
        try {
            a.score = std::stoi(fields[2]);
        } catch (const std::exception&) {
            throw ConfigError("annotations line " + std::to_string(line_no) +
                              ": score is not an integer");
        }
        if (a.score < 0 || a.score > 5) {
            throw ConfigError("annotations line " + std::to_string(line_no) +
                              ": score must be in 0..5");
        }
        if (fields[3] == "qa" || fields[3] == "QA") {
            a.rubric = Rubric::QA;
        } else if (fields[3] == "coding" || fields[3] == "Coding") {
            a.rubric = Rubric::Coding;
        } else {
            throw ConfigError("annotations line " + std::to_string(line_no) +
                              ": rubric must be 'qa' or 'coding'");
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width) {
    if (!(bin_width > 0.0)) throw ConfigError("bin width must be positive");
    if (values.empty()) return {};
    std::size_t max_bin = 0;
    for (double v : values) {
        max_bin = std::max(max_bin, static_cast<std::size_t>(std::floor(v / bin_width)));
    }
    std::vector<HistogramBin> bins(max_bin + 1);
    for (std::size_t k = 0; k <= max_bin; ++k) {
        bins[k].lo = static_cast<double>(k) * bin_width;
        bins[k].hi = static_cast<double>(k + 1) * bin_width;
    }
    for (double v : values) {
        ++bins[static_cast<std::size_t>(std::floor(v / bin_width))].count;
    }
    return bins;
}

std::vector<HistogramBin> histogram(std::span<const engine::GammaRecord> records,
                                    double bin_width) {
    std::vector<double> gammas;
    gammas.reserve(records.size());
    for (const auto& r : records) gammas.push_back(r.gamma);
    return histogram(gammas, bin_width);
}

JoinResult join_annotations(std::span<const engine::GammaRecord> records,
                            std::span<const Annotation> annotations) {
    JoinResult result;
    std::map<std::string, const engine::GammaRecord*> by_id;
    for (const auto& r : records) by_id[r.id] = &r;

    std::map<std::string, std::vector<int>> scores;
    for (const auto& a : annotations) {
        if (!by_id.count(a.record_id)) {
            result.dangling.push_back(a);
            continue;
        }
        scores[a.record_id].push_back(a.score);
    }

    for (const auto& r : records) {
        auto it = scores.find(r.id);
        if (it == scores.end()) {
            result.unannotated_ids.push_back(r.id);
            continue;
        }
        double sum = 0.0;
        for (int s : it->second) sum += s;
        result.joined.push_back(
            {&r, sum / static_cast<double>(it->second.size()), it->second.size()});
    }
    return result;
}

SummaryStats summary_stats(std::span<const JoinedRecord> joined, double threshold) {
    if (joined.empty()) throw EmptyInput("summary_stats requires at least one joined record");
    SummaryStats stats;
    stats.threshold = threshold;
    stats.n_total = joined.size();

    std::vector<double> gammas, ratings, gammas_low, ratings_low;
    for (const auto& j : joined) {
        gammas.push_back(j.record->gamma);
        ratings.push_back(j.mean_score);
        if (j.record->gamma < threshold) {
            gammas_low.push_back(j.record->gamma);
            ratings_low.push_back(j.mean_score);
        }
    }
    stats.gamma_all = mean_with_error(gammas);
    stats.rating_all = mean_with_error(ratings);
    stats.n_low = gammas_low.size();
    if (stats.n_low > 0) {
        stats.gamma_low = mean_with_error(gammas_low);
        stats.rating_low = mean_with_error(ratings_low);
    }
    return stats;
}

BinnedFit binned_rating_fit(std::span<const JoinedRecord> joined, double bin_width,
                            bool weighted) {
    if (!(bin_width > 0.0)) throw ConfigError("bin width must be positive");
    std::map<std::size_t, std::pair<double, std::size_t>> acc;  // bin -> (sum, count)
    for (const auto& j : joined) {
        const auto k = static_cast<std::size_t>(std::floor(j.record->gamma / bin_width));
        acc[k].first += j.mean_score;
        acc[k].second += 1;
    }
    if (acc.size() < 2) {
        throw InsufficientBins("binned fit needs at least two nonempty bins, have " +
                               std::to_string(acc.size()));
    }

    BinnedFit fit;
    fit.bin_width = bin_width;
    fit.weighted = weighted;
    std::vector<FitPoint> pts;
    for (const auto& [k, sc] : acc) {
        BinnedFit::Bin bin;
        bin.center = (static_cast<double>(k) + 0.5) * bin_width;
        bin.mean_rating = sc.first / static_cast<double>(sc.second);
        bin.count = sc.second;
        pts.push_back({bin.center, bin.mean_rating, weighted ? static_cast<double>(sc.second) : 1.0});
        fit.bins.push_back(bin);
    }
    const auto [m, b] = wls(pts);
    fit.slope_m = m;
    fit.intercept_b = b;
    return fit;
}

BinnedFit per_record_fit(std::span<const JoinedRecord> joined) {
    if (joined.size() < 2) throw InsufficientBins("per-record fit needs at least two records");
    std::vector<FitPoint> pts;
    pts.reserve(joined.size());
    for (const auto& j : joined) pts.push_back({j.record->gamma, j.mean_score, 1.0});
    BinnedFit fit;
    fit.bin_width = 0.0;
    fit.weighted = false;
    const auto [m, b] = wls(pts);
    fit.slope_m = m;
    fit.intercept_b = b;
    return fit;
}

double fleiss_kappa(std::span<const Annotation> annotations) {
    if (annotations.empty()) throw EmptyInput("fleiss_kappa requires annotations");

    std::map<std::string, std::array<std::size_t, 6>> table;
    for (const auto& a : annotations) {
        auto& row = table[a.record_id];
        ++row[static_cast<std::size_t>(a.score)];
    }

    std::size_t n_ratings = 0;
    for (const auto& [id, row] : table) {
        std::size_t total = 0;
        for (std::size_t c : row) total += c;
        if (n_ratings == 0) n_ratings = total;
        if (total != n_ratings) {
            throw ConfigError("fleiss_kappa requires the same number of ratings per record; '" +
                              id + "' has " + std::to_string(total));
        }
    }
    if (n_ratings < 2) throw ConfigError("fleiss_kappa requires at least 2 ratings per record");

    const double N = static_cast<double>(table.size());
    const double n = static_cast<double>(n_ratings);

    double p_bar = 0.0;
    std::array<double, 6> category_share{};
    for (const auto& [id, row] : table) {
        double agree = 0.0;
        for (std::size_t c : row) {
            agree += static_cast<double>(c) * (static_cast<double>(c) - 1.0);
            }
        p_bar += agree / (n * (n - 1.0));
        for (std::size_t j = 0; j < 6; ++j) {
            category_share[j] += static_cast<double>(row[j]) / (N * n);
        }
    }
    p_bar /= N;

    double pe = 0.0;
    for (double p : category_share) pe += p * p;

    if (pe == 1.0) {
        throw DegenerateAgreement(
            "every rating falls in one category; expected agreement is 1 and kappa is undefined");
    }
    return (p_bar - pe) / (1.0 - pe);
}

std::string format_uncertainty(double mean, double stderr_, int decimals) {
    if (decimals < 1) throw ConfigError("decimals must be >= 1");
    if (stderr_ < 0.0) throw ConfigError("stderr must be nonnegative");
    const double scale = std::pow(10.0, decimals);
    const long long u = std::llround(stderr_ * scale);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f(%lld)", decimals, mean, u);
    return buf;
}

}  // namespace gammascan::analysis
