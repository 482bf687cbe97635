#pragma once

// Static SVG power curves from a power CSV: one panel per (family, d), one
// curve per (method, filter, lambda) with its Wilson band. Output bytes depend
// only on the CSV contents.

#include "srgof/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace srgof {

// ============================================================================
// CSV INPUT
// ============================================================================

namespace detail {

inline std::vector<std::string> csv_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline double csv_double(const std::string& text, std::size_t row, const char* column) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    require_input(!text.empty() && ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(v),
                  "CSV row " + std::to_string(row) + ": column " + column + " is not a number: '" + text + "'");
    return v;
}

inline std::uint64_t csv_u64(const std::string& text, std::size_t row, const char* column) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    require_input(!text.empty() && ec == std::errc{} && ptr == text.data() + text.size(),
                  "CSV row " + std::to_string(row) + ": column " + column + " is not an unsigned integer: '" + text +
                      "'");
    return v;
}

}  // namespace detail

// Data rows are numbered from 1; the header is row 0.
inline std::vector<PowerRecord> parse_power_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    require_input(static_cast<bool>(std::getline(in, line)), "CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require_input(line == kPowerHeader, "CSV row 0: header must be '" + std::string(kPowerHeader) + "'");
    std::vector<PowerRecord> rows;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = detail::csv_fields(line);
        require_input(f.size() == 15, "CSV row " + std::to_string(row) + ": expected 15 fields, got " +
                                          std::to_string(f.size()));
        PowerRecord r;
        r.study = f[0];
        r.method = f[1];
        r.filter = f[2];
        r.family = f[3];
        r.d = detail::csv_u64(f[4], row, "d");
        r.theta = detail::csv_double(f[5], row, "theta");
        r.n = detail::csv_u64(f[6], row, "n");
        r.m = detail::csv_u64(f[7], row, "m");
        r.reference_size = detail::csv_u64(f[8], row, "N");
        r.lambda = f[9];
        r.rate = detail::csv_double(f[10], row, "rate");
        r.lo = detail::csv_double(f[11], row, "lo");
        r.hi = detail::csv_double(f[12], row, "hi");
        r.reps = detail::csv_u64(f[13], row, "reps");
        r.seed = detail::csv_u64(f[14], row, "seed");
        require_input(r.rate >= 0.0 && r.rate <= 1.0 && r.lo <= r.rate && r.rate <= r.hi,
                      "CSV row " + std::to_string(row) + ": rate must lie in [lo, hi] within [0, 1]");
        r.rejections = static_cast<std::size_t>(std::llround(r.rate * static_cast<double>(r.reps)));
        rows.push_back(r);
    }
    require_input(!rows.empty(), "CSV has no data rows to plot");
    return rows;
}

// ============================================================================
// SVG OUTPUT
// ============================================================================

namespace detail {

inline std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace detail

struct PlotPanel {
    std::string file_name;
    std::string svg;
};

// One panel per (family, d) in sorted order; curves keep their CSV order.
inline std::vector<PlotPanel> render_power_panels(const std::vector<PowerRecord>& rows) {
    require_input(!rows.empty(), "no data rows to plot");
    using PanelKey = std::pair<std::string, std::size_t>;
    std::map<PanelKey, std::vector<const PowerRecord*>> panels;
    for (const auto& r : rows) panels[{r.family, r.d}].push_back(&r);

    std::vector<PlotPanel> out;
    constexpr double width = 800, height = 420, left = 60, right = 320, top = 40, bottom = 50;
    const double plot_w = width - left - right, plot_h = height - top - bottom;
    for (const auto& [key, records] : panels) {
        std::vector<std::string> curve_names;
        std::map<std::string, std::vector<const PowerRecord*>> curves;
        double x_min = records.front()->theta, x_max = x_min;
        for (const PowerRecord* r : records) {
            std::string name = r->method;
            if (r->filter != "none") name += " / " + r->filter;
            if (r->lambda != "na") name += " / " + r->lambda;
            if (!curves.count(name)) curve_names.push_back(name);
            curves[name].push_back(r);
            x_min = std::min(x_min, r->theta);
            x_max = std::max(x_max, r->theta);
        }
        if (x_max == x_min) {
            x_min -= 0.5;
            x_max += 0.5;
        }
        auto sx = [&](double x) { return detail::fixed2(left + (x - x_min) / (x_max - x_min) * plot_w); };
        auto sy = [&](double y) { return detail::fixed2(top + (1.0 - y) * plot_h); };

        std::ostringstream s;
        s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
          << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
        s << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
        s << "<text x=\"" << detail::fixed2(left + plot_w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
          << detail::xml_escape(key.first) << ", d = " << key.second << "</text>\n";
        // Axes, grid and ticks.
        for (int i = 0; i <= 5; ++i) {
            const double y = 0.2 * i;
            s << "<line x1=\"" << left << "\" y1=\"" << sy(y) << "\" x2=\"" << detail::fixed2(left + plot_w)
              << "\" y2=\"" << sy(y) << "\" stroke=\"#e0e0e0\"/>\n";
            s << "<text x=\"" << detail::fixed2(left - 6) << "\" y=\"" << sy(y)
              << "\" text-anchor=\"end\" dominant-baseline=\"middle\">" << format_number(y) << "</text>\n";
        }
        for (int i = 0; i <= 4; ++i) {
            const double x = x_min + (x_max - x_min) * i / 4.0;
            s << "<text x=\"" << sx(x) << "\" y=\"" << detail::fixed2(top + plot_h + 16)
              << "\" text-anchor=\"middle\">" << format_number(std::round(x * 1e6) / 1e6) << "</text>\n";
        }
        s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << detail::fixed2(plot_w) << "\" height=\""
          << detail::fixed2(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
        s << "<text x=\"" << detail::fixed2(left + plot_w / 2) << "\" y=\"" << detail::fixed2(height - 12)
          << "\" text-anchor=\"middle\">theta</text>\n";
        s << "<text x=\"16\" y=\"" << detail::fixed2(top + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
          << detail::fixed2(top + plot_h / 2) << ")\">rejection rate</text>\n";

        for (std::size_t c = 0; c < curve_names.size(); ++c) {
            auto points = curves[curve_names[c]];
            std::stable_sort(points.begin(), points.end(),
                             [](const PowerRecord* a, const PowerRecord* b) { return a->theta < b->theta; });
            const std::string color = detail::kPalette[c % std::size(detail::kPalette)];
            s << "<g class=\"curve\" stroke=\"" << color << "\" fill=\"" << color << "\">\n";
            if (points.size() >= 2) {
                s << "<polygon class=\"band\" stroke=\"none\" fill-opacity=\"0.15\" points=\"";
                for (const PowerRecord* p : points) s << sx(p->theta) << ',' << sy(p->hi) << ' ';
                for (auto it = points.rbegin(); it != points.rend(); ++it)
                    s << sx((*it)->theta) << ',' << sy((*it)->lo) << (std::next(it) == points.rend() ? "" : " ");
                s << "\"/>\n<polyline fill=\"none\" stroke-width=\"1.5\" points=\"";
                for (std::size_t i = 0; i < points.size(); ++i)
                    s << sx(points[i]->theta) << ',' << sy(points[i]->rate) << (i + 1 == points.size() ? "" : " ");
                s << "\"/>\n";
            } else {
                // A lone point shows its interval as a thin bar.
                const PowerRecord* p = points.front();
                const double x = left + (p->theta - x_min) / (x_max - x_min) * plot_w;
                s << "<rect class=\"band\" stroke=\"none\" fill-opacity=\"0.15\" x=\"" << detail::fixed2(x - 3)
                  << "\" y=\"" << sy(p->hi) << "\" width=\"6\" height=\"" << detail::fixed2((p->hi - p->lo) * plot_h)
                  << "\"/>\n";
            }
            for (const PowerRecord* p : points)
                s << "<circle cx=\"" << sx(p->theta) << "\" cy=\"" << sy(p->rate) << "\" r=\"3\"/>\n";
            s << "</g>\n";
            const double ly = top + 10 + 18.0 * static_cast<double>(c);
            s << "<rect x=\"" << detail::fixed2(left + plot_w + 12) << "\" y=\"" << detail::fixed2(ly - 5)
              << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
            s << "<text x=\"" << detail::fixed2(left + plot_w + 28) << "\" y=\"" << detail::fixed2(ly)
              << "\" dominant-baseline=\"middle\">" << detail::xml_escape(curve_names[c]) << "</text>\n";
        }
        s << "</svg>\n";
        out.push_back({"power_" + key.first + "_d" + std::to_string(key.second) + ".svg", s.str()});
    }
    return out;
}

// Writes one SVG per panel into out_dir and returns the written paths.
inline std::vector<std::string> emit_plots(const std::string& csv_path, const std::string& out_dir) {
    std::ifstream in(csv_path, std::ios::binary);
    require_input(static_cast<bool>(in), "cannot open '" + csv_path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    const auto panels = render_power_panels(parse_power_csv(text.str()));
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> paths;
    for (const auto& p : panels) {
        const auto path = (std::filesystem::path(out_dir) / p.file_name).string();
        std::ofstream(path, std::ios::binary) << p.svg;
        paths.push_back(path);
    }
    return paths;
}

}  // namespace srgof
