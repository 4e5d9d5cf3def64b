#pragma once

// Scenario reports as CSV and SVG scatter plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "clicknet/errors.hpp"
#include "clicknet/experiments.hpp"
#include "clicknet/textfmt.hpp"

namespace clicknet {

inline constexpr std::string_view kReportVersionLine = "# clicknet scenario-report v1";
inline constexpr std::string_view kReportHeader =
    "scenario,sweep,m,eta,parameter,nbar,stream_id,label,network_output,x_mom,delta,r_mom,network_flag,moments_flag,state";

inline void write_report_csv(const ScenarioReport& report, std::ostream& out) {
    using text::format_double;
    out << kReportVersionLine << "\n" << kReportHeader << "\n";
    for (const auto& r : report.rows) {
        out << report.name << "," << r.sweep << "," << r.m << "," << format_double(r.eta) << ","
            << format_double(r.parameter) << "," << format_double(r.nbar) << "," << r.stream_id << "," << r.label << ","
            << format_double(r.network_output) << "," << format_double(r.moments.min_eigenvalue) << ","
            << format_double(r.moments.error) << "," << format_double(r.moments.significance) << ","
            << (r.network_flag ? 1 : 0) << "," << (r.moments_flag ? 1 : 0) << "," << r.state << "\n";
    }
}

inline std::string report_csv(const ScenarioReport& report) {
    std::ostringstream ss;
    write_report_csv(report, ss);
    return ss.str();
}

inline ScenarioReport read_report_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != kReportVersionLine) throw LoadError("missing report version line");
    if (!std::getline(in, line) || text::trim(line) != kReportHeader) throw LoadError("report header mismatch");
    ScenarioReport report;
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto c = text::split(text::trim(line), ',');
        if (c.size() != 15) throw LoadError("wrong column count on line " + std::to_string(line_no));
        ReportRow r;
        int nf = 0, mf = 0;
        report.name = std::string(c[0]);
        r.sweep = std::string(c[1]);
        const bool ok = text::parse_integer(c[2], r.m) && text::parse_double(c[3], r.eta) &&
                        text::parse_double(c[4], r.parameter) && text::parse_double(c[5], r.nbar) &&
                        text::parse_integer(c[6], r.stream_id) && text::parse_integer(c[7], r.label) &&
                        text::parse_double(c[8], r.network_output) && text::parse_double(c[9], r.moments.min_eigenvalue) &&
                        text::parse_double(c[10], r.moments.error) && text::parse_double(c[11], r.moments.significance) &&
                        text::parse_integer(c[12], nf) && text::parse_integer(c[13], mf);
        if (!ok) throw LoadError("bad field on line " + std::to_string(line_no));
        r.network_flag = nf != 0;
        r.moments_flag = mf != 0;
        r.state = std::string(c[14]);
        report.rows.push_back(std::move(r));
    }
    return report;
}

inline std::string summary_csv(const ScenarioReport& report) {
    std::string out = "sweep,m,label,count,network_rate,moments_rate\n";
    for (const auto& s : report.summary()) {
        out += s.sweep + "," + std::to_string(s.m) + "," + std::to_string(s.label) + "," + std::to_string(s.count) + "," +
               text::format_double(s.network_rate) + "," + text::format_double(s.moments_rate) + "\n";
    }
    return out;
}

inline std::string baseline_csv(const BaselineReport& report) {
    std::string out = "family,label,nbar,stream_id,r_lr\n";
    for (const auto& r : report.rows) {
        out += r.family + "," + std::to_string(r.label) + "," + text::format_double(r.nbar) + "," +
               std::to_string(r.stream_id) + "," + text::format_double(r.prediction) + "\n";
    }
    return out;
}

enum class PlotKind { network, moments, linear };

inline PlotKind parse_plot_kind(std::string_view s) {
    if (s == "network") return PlotKind::network;
    if (s == "moments") return PlotKind::moments;
    if (s == "linear") return PlotKind::linear;
    throw ConfigError("unknown plot kind '" + std::string(s) + "'");
}

struct PlotPoint {
    std::string series;
    std::string panel;
    double x = 0.0;
    double y = 0.0;
};

namespace detail {

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline const char* series_colour(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    return palette[i % 10];
}

/// One panel per distinct `panel` label, laid out side by side.
inline std::string render_svg(const std::vector<PlotPoint>& points, const std::string& x_label,
                              const std::string& y_label, double y_min, double y_max, double threshold) {
    std::vector<std::string> panels, series;
    for (const auto& p : points) {
        if (std::find(panels.begin(), panels.end(), p.panel) == panels.end()) panels.push_back(p.panel);
        if (std::find(series.begin(), series.end(), p.series) == series.end()) series.push_back(p.series);
    }
    double x_min = points.front().x, x_max = points.front().x;
    for (const auto& p : points) {
        x_min = std::min(x_min, p.x);
        x_max = std::max(x_max, p.x);
    }
    if (x_max == x_min) x_max = x_min + 1.0;
    if (y_max == y_min) y_max = y_min + 1.0;

    const double pw = 420, ph = 300, ml = 55, mt = 30, mb = 45, gap = 30;
    const double width = ml + panels.size() * (pw + gap) + 120;
    const double height = mt + ph + mb;
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt2(width) + "\" height=\"" +
                      fmt2(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const double ox = ml + pi * (pw + gap);
        auto sx = [&](double x) { return ox + (x - x_min) / (x_max - x_min) * pw; };
        auto sy = [&](double y) { return mt + ph - (std::clamp(y, y_min, y_max) - y_min) / (y_max - y_min) * ph; };
        svg += "<g class=\"panel\">\n<rect x=\"" + fmt2(ox) + "\" y=\"" + fmt2(mt) + "\" width=\"" + fmt2(pw) +
               "\" height=\"" + fmt2(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + fmt2(ox + pw / 2) + "\" y=\"" + fmt2(mt - 10) + "\" text-anchor=\"middle\">" + panels[pi] +
               "</text>\n";
        for (int t = 0; t <= 4; ++t) {
            const double xv = x_min + (x_max - x_min) * t / 4.0;
            const double yv = y_min + (y_max - y_min) * t / 4.0;
            svg += "<text x=\"" + fmt2(sx(xv)) + "\" y=\"" + fmt2(mt + ph + 15) + "\" text-anchor=\"middle\">" +
                   fmt2(xv) + "</text>\n";
            svg += "<text x=\"" + fmt2(ox - 5) + "\" y=\"" + fmt2(sy(yv) + 4) + "\" text-anchor=\"end\">" + fmt2(yv) +
                   "</text>\n";
        }
        svg += "<line class=\"threshold\" x1=\"" + fmt2(ox) + "\" y1=\"" + fmt2(sy(threshold)) + "\" x2=\"" +
               fmt2(ox + pw) + "\" y2=\"" + fmt2(sy(threshold)) + "\" stroke=\"gray\" stroke-dasharray=\"4,3\"/>\n";
        for (const auto& p : points) {
            if (p.panel != panels[pi]) continue;
            const auto si = static_cast<std::size_t>(std::find(series.begin(), series.end(), p.series) - series.begin());
            svg += "<circle cx=\"" + fmt2(sx(p.x)) + "\" cy=\"" + fmt2(sy(p.y)) + "\" r=\"1.6\" fill=\"" +
                   series_colour(si) + "\"/>\n";
        }
        svg += "<text x=\"" + fmt2(ox + pw / 2) + "\" y=\"" + fmt2(mt + ph + 35) + "\" text-anchor=\"middle\">" +
               x_label + "</text>\n</g>\n";
    }
    svg += "<text x=\"12\" y=\"" + fmt2(mt + ph / 2) + "\" transform=\"rotate(-90 12 " + fmt2(mt + ph / 2) +
           ")\" text-anchor=\"middle\">" + y_label + "</text>\n";
    const double lx = ml + panels.size() * (pw + gap);
    for (std::size_t si = 0; si < series.size(); ++si) {
        const double ly = mt + 10 + 16 * si;
        svg += "<circle cx=\"" + fmt2(lx) + "\" cy=\"" + fmt2(ly) + "\" r=\"4\" fill=\"" + series_colour(si) + "\"/>\n";
        svg += "<text x=\"" + fmt2(lx + 8) + "\" y=\"" + fmt2(ly + 4) + "\">" + series[si] + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace detail

/// SVG scatter of a scenario report: network output or the moments
/// significance (negative values clamped to 0) against n-bar / p, one panel
/// per sample size, with the decision threshold drawn as a dashed line.
/// Returns an empty string for an empty report.
inline std::string plot_svg(const ScenarioReport& report, PlotKind kind) {
    if (report.rows.empty()) return {};
    std::vector<PlotPoint> pts;
    double y_max = kind == PlotKind::network ? 1.0 : 2.0 * report.significance;
    if (kind == PlotKind::moments) {
        for (const auto& r : report.rows) {
            if (std::isfinite(r.moments.significance)) y_max = std::max(y_max, std::min(r.moments.significance, 100.0));
        }
    }
    bool mixture = false;
    for (const auto& r : report.rows) {
        double y = kind == PlotKind::network ? r.network_output : std::max(r.moments.significance, 0.0);
        if (std::isnan(y)) continue;
        if (std::isinf(y)) y = y_max;
        mixture = mixture || r.sweep.starts_with("mixture");
        pts.push_back({r.sweep, "m = " + std::to_string(r.m), r.parameter, y});
    }
    if (pts.empty()) return {};
    return detail::render_svg(pts, mixture ? "p" : "mean photon number",
                              kind == PlotKind::network ? "network output" : "r_mom", 0.0, y_max,
                              kind == PlotKind::network ? report.threshold : report.significance);
}

inline std::string plot_svg(const BaselineReport& report) {
    if (report.rows.empty()) return {};
    std::vector<PlotPoint> pts;
    double y_min = 0.0, y_max = 1.0;
    for (const auto& r : report.rows) {
        pts.push_back({r.family, "linear regression", r.nbar, r.prediction});
        y_min = std::min(y_min, r.prediction);
        y_max = std::max(y_max, r.prediction);
    }
    return detail::render_svg(pts, "mean photon number", "r_lr", y_min, y_max, kDefaultNetworkThreshold);
}

namespace detail {

inline bool write_svg(const std::string& svg, const std::string& path) {
    if (svg.empty()) {
        std::cerr << "warning: empty report, no plot written to " << path << "\n";
        return false;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
    out << svg;
    return true;
}

}  // namespace detail

/// Writes the plot to `path`; an empty report is a no-op with a warning.
inline bool emit_plot(const ScenarioReport& report, PlotKind kind, const std::string& path) {
    return detail::write_svg(plot_svg(report, kind), path);
}

inline bool emit_plot(const BaselineReport& report, const std::string& path) {
    return detail::write_svg(plot_svg(report), path);
}

}  // namespace clicknet
