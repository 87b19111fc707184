#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gammascan/analysis/analysis.hpp"

namespace gammascan::analysis {

// Everything cmd_report produces, assembled in memory so it can be tested
// without touching the filesystem.
struct ReportBundle {
    std::vector<HistogramBin> hist;
    std::optional<SummaryStats> summary;
    std::optional<BinnedFit> fit;
    std::string fit_skipped_reason;
    std::optional<double> kappa;
    std::string kappa_skipped_reason;
    std::size_t record_count = 0;
    std::size_t error_record_count = 0;
    std::vector<Annotation> dangling;
    std::vector<std::string> unannotated_ids;
    std::string model_label;
};

ReportBundle build_report(std::span<const engine::GammaRecord> records,
                          std::size_t error_record_count,
                          const std::vector<Annotation>* annotations, double bin_width = 0.05,
                          double low_threshold = 0.05, bool weighted_fit = true);

nlohmann::json report_to_json(const ReportBundle& report);

// Self-contained SVG renderings; byte-deterministic for fixed inputs.
std::string render_histogram_svg(const std::vector<HistogramBin>& hist,
                                 const std::string& title);
std::string render_fit_svg(const BinnedFit& fit, const std::string& title);

// Plaintext summary table using the mean(stderr-in-last-digits) notation.
std::string render_summary_table(const ReportBundle& report);

// Writes report.json, histogram.svg, and when available fit.svg and
// summary.txt into out_dir; returns the paths written.
std::vector<std::filesystem::path> write_report_files(const ReportBundle& report,
                                                      const std::filesystem::path& out_dir);

}  // namespace gammascan::analysis
