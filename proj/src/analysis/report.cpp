#include "gammascan/analysis/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gammascan/errors.hpp"

namespace gammascan::analysis {

using nlohmann::json;

namespace {

std::string fmt(double v, int decimals = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

ReportBundle build_report(std::span<const engine::GammaRecord> records,
                          std::size_t error_record_count,
                          const std::vector<Annotation>* annotations, double bin_width,
                          double low_threshold, bool weighted_fit) {
    ReportBundle report;
    report.record_count = records.size();
    report.error_record_count = error_record_count;
    report.hist = histogram(records, bin_width);
    if (!records.empty()) {
        report.model_label = records.front().llm_model;
    }

    if (annotations != nullptr) {
        JoinResult join = join_annotations(records, *annotations);
        report.dangling = join.dangling;
        report.unannotated_ids = join.unannotated_ids;
        if (!join.joined.empty()) {
            report.summary = summary_stats(join.joined, low_threshold);
            try {
                report.fit = binned_rating_fit(join.joined, bin_width, weighted_fit);
            } catch (const InsufficientBins& e) {
                report.fit_skipped_reason = e.what();
            }
        } else {
            report.fit_skipped_reason = "no annotations joined to records";
        }
        try {
            // Kappa works on the ratings that actually joined.
            std::vector<Annotation> joined_annotations;
            for (const auto& a : *annotations) {
                bool dangling = false;
                for (const auto& d : report.dangling) {
                    if (d.record_id == a.record_id && d.annotator_id == a.annotator_id) {
                        dangling = true;
                        break;
                    }
                }
                if (!dangling) joined_annotations.push_back(a);
            }
            if (joined_annotations.empty()) {
                report.kappa_skipped_reason = "no annotations joined to records";
            } else {
                report.kappa = fleiss_kappa(joined_annotations);
            }
        } catch (const Error& e) {
            report.kappa_skipped_reason = e.what();
        }
    }
    return report;
}

json report_to_json(const ReportBundle& report) {
    json hist = json::array();
    for (const auto& bin : report.hist) {
        hist.push_back(json{{"lo", bin.lo}, {"hi", bin.hi}, {"count", bin.count}});
    }
    json j = {
        {"record_count", report.record_count},
        {"error_record_count", report.error_record_count},
        {"model", report.model_label},
        {"histogram", hist},
    };
    if (report.summary) {
        const auto& s = *report.summary;
        json sj = {
            {"threshold", s.threshold},
            {"n_total", s.n_total},
            {"n_low", s.n_low},
            {"mean_gamma", {{"mean", s.gamma_all.mean}, {"stderr", s.gamma_all.stderr_}}},
            {"mean_rating", {{"mean", s.rating_all.mean}, {"stderr", s.rating_all.stderr_}}},
        };
        if (s.gamma_low) {
            sj["mean_gamma_low"] = {{"mean", s.gamma_low->mean}, {"stderr", s.gamma_low->stderr_}};
            sj["mean_rating_low"] = {{"mean", s.rating_low->mean},
                                     {"stderr", s.rating_low->stderr_}};
        }
        j["summary"] = sj;
    }
    if (report.fit) {
        json bins = json::array();
        for (const auto& b : report.fit->bins) {
            bins.push_back(json{{"center", b.center}, {"mean_rating", b.mean_rating},
                                {"count", b.count}});
        }
        j["fit"] = {
            {"m", report.fit->slope_m},
            {"b", report.fit->intercept_b},
            {"weighted", report.fit->weighted},
            {"bin_width", report.fit->bin_width},
            {"bins", bins},
        };
    } else if (!report.fit_skipped_reason.empty()) {
        j["fit"] = {{"skipped", report.fit_skipped_reason}};
    }
    if (report.kappa) {
        j["fleiss_kappa"] = *report.kappa;
    } else if (!report.kappa_skipped_reason.empty()) {
        j["fleiss_kappa"] = {{"skipped", report.kappa_skipped_reason}};
    }
    if (!report.dangling.empty()) {
        json d = json::array();
        for (const auto& a : report.dangling) {
            d.push_back(json{{"record_id", a.record_id}, {"annotator_id", a.annotator_id}});
        }
        j["dangling_annotations"] = d;
    }
    if (!report.unannotated_ids.empty()) j["unannotated_ids"] = report.unannotated_ids;
    return j;
}

std::string render_histogram_svg(const std::vector<HistogramBin>& hist, const std::string& title) {
    const int width = 640, height = 400, margin = 48;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "  <text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << xml_escape(title) << "</text>\n";

    std::size_t max_count = 1;
    for (const auto& bin : hist) max_count = std::max(max_count, bin.count);
    const double plot_w = width - 2.0 * margin;
    const double plot_h = height - 2.0 * margin;
    const double bar_w = hist.empty() ? plot_w : plot_w / static_cast<double>(hist.size());

    for (std::size_t i = 0; i < hist.size(); ++i) {
        const double h = plot_h * static_cast<double>(hist[i].count) /
                         static_cast<double>(max_count);
        const double x = margin + static_cast<double>(i) * bar_w;
        const double y = height - margin - h;
        out << "  <rect class=\"bin\" x=\"" << fmt(x, 2) << "\" y=\"" << fmt(y, 2) << "\" width=\""
            << fmt(bar_w * 0.92, 2) << "\" height=\"" << fmt(h, 2)
            << "\" fill=\"#4477aa\"/>\n";
        out << "  <text x=\"" << fmt(x + bar_w * 0.46, 2) << "\" y=\"" << height - margin + 14
            << "\" text-anchor=\"middle\" font-size=\"9\">" << fmt(hist[i].lo, 2) << "</text>\n";
    }
    out << "  <line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
        << width - margin << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
        << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    out << "  <text x=\"" << margin - 6 << "\" y=\"" << margin << "\" text-anchor=\"end\" "
        << "font-size=\"9\">" << max_count << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

std::string render_fit_svg(const BinnedFit& fit, const std::string& title) {
    const int width = 640, height = 400, margin = 48;
    double x_max = 0.0;
    for (const auto& b : fit.bins) x_max = std::max(x_max, b.center);
    x_max = std::max(x_max * 1.1, 1e-9);
    const double y_max = 5.0;

    auto px = [&](double x) { return margin + (width - 2.0 * margin) * x / x_max; };
    auto py = [&](double y) {
        return height - margin - (height - 2.0 * margin) * std::clamp(y, 0.0, y_max) / y_max;
    };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "  <text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << xml_escape(title) << "</text>\n";
    out << "  <line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
        << width - margin << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
        << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";

    for (const auto& b : fit.bins) {
        out << "  <circle class=\"bin-mean\" cx=\"" << fmt(px(b.center), 2) << "\" cy=\""
            << fmt(py(b.mean_rating), 2) << "\" r=\"4\" fill=\"#228833\"/>\n";
    }
    const double y0 = fit.intercept_b;
    const double y1 = fit.slope_m * x_max + fit.intercept_b;
    out << "  <line class=\"fit\" x1=\"" << fmt(px(0.0), 2) << "\" y1=\"" << fmt(py(y0), 2)
        << "\" x2=\"" << fmt(px(x_max), 2) << "\" y2=\"" << fmt(py(y1), 2)
        << "\" stroke=\"#cc3311\" stroke-width=\"2\"/>\n";
    out << "  <text x=\"" << width - margin << "\" y=\"" << margin
        << "\" text-anchor=\"end\" font-size=\"12\">m=" << fmt(fit.slope_m, 4)
        << " b=" << fmt(fit.intercept_b, 4) << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

std::string render_summary_table(const ReportBundle& report) {
    std::ostringstream out;
    out << "model | <g> | <g_low> | <R> | <R_low> | n | n_low\n";
    out << "----- | --- | ------- | --- | ------- | - | -----\n";
    if (!report.summary) {
        out << "(no annotations)\n";
        return out.str();
    }
    const auto& s = *report.summary;
    out << report.model_label << " | " << format_uncertainty(s.gamma_all.mean, s.gamma_all.stderr_, 3)
        << " | "
        << (s.gamma_low ? format_uncertainty(s.gamma_low->mean, s.gamma_low->stderr_, 3) : "-")
        << " | " << format_uncertainty(s.rating_all.mean, s.rating_all.stderr_, 2) << " | "
        << (s.rating_low ? format_uncertainty(s.rating_low->mean, s.rating_low->stderr_, 2) : "-")
        << " | " << s.n_total << " | " << s.n_low << "\n";
    if (report.fit) {
        out << "\nbinned linear fit: rating = m*gamma + b, m=" << fmt(report.fit->slope_m, 4)
            << ", b=" << fmt(report.fit->intercept_b, 4)
            << (report.fit->weighted ? " (count-weighted)" : " (unweighted)") << "\n";
    } else if (!report.fit_skipped_reason.empty()) {
        out << "\nbinned linear fit: not computed (" << report.fit_skipped_reason << ")\n";
    }
    if (report.kappa) {
        out << "fleiss kappa: " << fmt(*report.kappa, 4) << "\n";
    } else if (!report.kappa_skipped_reason.empty()) {
        out << "fleiss kappa: not computed (" << report.kappa_skipped_reason << ")\n";
    }
    return out.str();
}

std::vector<std::filesystem::path> write_report_files(const ReportBundle& report,
                                                      const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;

    auto write = [&](const std::filesystem::path& name, const std::string& content) {
        const auto path = out_dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + path.string());
        out << content;
        written.push_back(path);
    };

    write("report.json", report_to_json(report).dump(2) + "\n");
    write("histogram.svg",
          render_histogram_svg(report.hist, "gamma distribution: " + report.model_label));
    if (report.fit) {
        write("fit.svg", render_fit_svg(*report.fit, "rating vs gamma: " + report.model_label));
    }
    if (report.summary) {
        write("summary.txt", render_summary_table(report));
    }
    return written;
}

}  // namespace gammascan::analysis
