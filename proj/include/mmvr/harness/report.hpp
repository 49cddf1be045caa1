#pragma once

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "mmvr/harness/evaluate.hpp"
#include "mmvr/harness/recover.hpp"

namespace mmvr::harness {

// Fixed-format numbers keep every artifact byte-stable across runs.
inline std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

// ---- CSV ----

inline std::string csv_metrics(const MetricsReport& rep) {
    std::string s = "metric,value\n";
    s += "top1," + fmt(rep.top1) + "\n";
    s += "top5," + fmt(rep.top5) + "\n";
    s += "mAP," + fmt(rep.map_score) + "\n";
    s += "samples," + std::to_string(rep.samples) + "\n";
    s += "class,precision,recall,f1,support\n";
    for (std::size_t c = 0; c < rep.labels.size(); ++c) {
        const ClassMetrics& m = rep.per_class[c];
        s += rep.labels[c] + "," + fmt(m.precision) + "," + fmt(m.recall) + "," + fmt(m.f1) + "," +
             std::to_string(m.support) + "\n";
    }
    return s;
}

inline std::string csv_confusion(const MetricsReport& rep) {
    std::string s = "truth\\pred";
    for (const auto& l : rep.labels) s += "," + l;
    s += "\n";
    for (std::size_t r = 0; r < rep.labels.size(); ++r) {
        s += rep.labels[r];
        for (std::size_t c = 0; c < rep.labels.size(); ++c)
            s += "," + std::to_string(rep.confusion[r][c]);
        s += "\n";
    }
    return s;
}

// Obstacle sweep table: one row per obstacle condition, metric columns.
inline std::string csv_obstacle_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
    std::string s = "obstacle,top1,top5,mAP,samples\n";
    for (const auto& [name, rep] : rows)
        s += name + "," + fmt(rep.top1) + "," + fmt(rep.top5) + "," + fmt(rep.map_score) + "," +
             std::to_string(rep.samples) + "\n";
    return s;
}

inline std::string csv_password_curve(const RecoveryCurve& curve) {
    std::string s = "length,top1,top5,trials\n";
    for (const auto& [l, v] : curve.top1)
        s += std::to_string(l) + "," + fmt(v) + "," + fmt(curve.top5.at(l)) + "," +
             std::to_string(curve.trials.at(l)) + "\n";
    return s;
}

inline std::string csv_per_key(const std::map<std::string, double>& per_key) {
    std::string s = "key,top1\n";
    for (const auto& [k, v] : per_key) s += k + "," + fmt(v) + "\n";
    return s;
}

// ---- SVG (header-free deterministic markup) ----

namespace svg {

inline std::string open(int w, int h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
           "\" height=\"" + std::to_string(h) + "\" font-family=\"monospace\" font-size=\"10\">\n";
}

inline std::string rect(double x, double y, double w, double h, const std::string& fill) {
    return "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(w) + "\" height=\"" +
           fmt(h) + "\" fill=\"" + fill + "\"/>\n";
}

inline std::string text(double x, double y, const std::string& s) {
    return "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\">" + s + "</text>\n";
}

inline std::string line(double x1, double y1, double x2, double y2) {
    return "<line x1=\"" + fmt(x1) + "\" y1=\"" + fmt(y1) + "\" x2=\"" + fmt(x2) + "\" y2=\"" +
           fmt(y2) + "\" stroke=\"black\"/>\n";
}

inline std::string heat_color(double v) {  // v in [0,1], white -> dark blue
    int c = int(255.0 * (1.0 - v) + 0.5);
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02xff", c, c);
    return buf;
}

}  // namespace svg

inline std::string svg_no_data(const std::string& title) {
    std::string s = svg::open(320, 80);
    s += svg::text(10, 20, title);
    s += svg::text(10, 50, "no data");
    s += "</svg>\n";
    return s;
}

inline std::string svg_confusion_heatmap(const MetricsReport& rep, const std::string& title) {
    if (rep.labels.empty() || rep.samples == 0) return svg_no_data(title);
    int n = int(rep.labels.size());
    double cell = std::max(14.0, 300.0 / n);
    int w = int(80 + n * cell + 20), h = int(60 + n * cell + 20);
    std::string s = svg::open(w, h);
    s += svg::text(10, 16, title);
    for (int r = 0; r < n; ++r) {
        long row_sum = 0;
        for (int c = 0; c < n; ++c) row_sum += rep.confusion[std::size_t(r)][std::size_t(c)];
        for (int c = 0; c < n; ++c) {
            double v = row_sum > 0
                           ? double(rep.confusion[std::size_t(r)][std::size_t(c)]) / double(row_sum)
                           : 0.0;
            s += svg::rect(80 + c * cell, 40 + r * cell, cell - 1, cell - 1, svg::heat_color(v));
        }
        s += svg::text(4, 40 + r * cell + cell * 0.7, rep.labels[std::size_t(r)]);
    }
    return s + "</svg>\n";
}

inline std::string svg_per_key_bars(const std::map<std::string, double>& per_key,
                                    const std::string& title) {
    if (per_key.empty()) return svg_no_data(title);
    int n = int(per_key.size());
    double bw = 14.0;
    int w = int(40 + n * bw + 20), h = 180;
    std::string s = svg::open(w, h);
    s += svg::text(10, 16, title);
    s += svg::line(30, 150, 30 + n * bw, 150);
    int i = 0;
    for (const auto& [k, v] : per_key) {
        double bh = v * 110.0;
        s += svg::rect(32 + i * bw, 150 - bh, bw - 3, bh, "#4466cc");
        s += svg::text(32 + i * bw, 164, k);
        ++i;
    }
    return s + "</svg>\n";
}

// Generic named curves over integer x (password lengths, sweep positions).
inline std::string svg_curves(const std::vector<std::pair<std::string, std::map<int, double>>>& curves,
                              const std::string& title) {
    bool any = false;
    for (const auto& [name, c] : curves) any = any || !c.empty();
    if (!any) return svg_no_data(title);
    int xmin = 1 << 30, xmax = -(1 << 30);
    for (const auto& [name, c] : curves)
        for (const auto& [x, y] : c) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
        }
    double px0 = 40, px1 = 360, py0 = 170, py1 = 30;
    auto X = [&](int x) {
        return xmax > xmin ? px0 + (px1 - px0) * double(x - xmin) / double(xmax - xmin)
                           : (px0 + px1) / 2;
    };
    auto Y = [&](double y) { return py0 + (py1 - py0) * y; };
    std::string s = svg::open(400, 200);
    s += svg::text(10, 16, title);
    s += svg::line(px0, py0, px1, py0);
    s += svg::line(px0, py0, px0, py1);
    const char* colors[] = {"#cc3333", "#3333cc", "#33aa33", "#aa33aa"};
    int ci = 0;
    for (const auto& [name, c] : curves) {
        std::string col = colors[ci % 4];
        std::string path;
        bool first = true;
        for (const auto& [x, y] : c) {
            path += (first ? "M" : "L") + fmt(X(x)) + " " + fmt(Y(y));
            first = false;
        }
        s += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + col + "\"/>\n";
        s += svg::text(px1 - 80, py1 + 12 * ci, name);
        ++ci;
    }
    return s + "</svg>\n";
}

// ---- bundled report emission ----

struct ReportInputs {
    std::optional<MetricsReport> activity;
    std::optional<KeyEvalResult> keystroke;
    std::optional<RecoveryCurve> passwords;
    std::vector<std::pair<std::string, MetricsReport>> obstacle_rows;
};

inline std::vector<std::string> emit_report(const ReportInputs& in, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::vector<std::string> written;
    auto put = [&](const std::string& name, const std::string& content) {
        io::write_text((fs::path(out_dir) / name).string(), content);
        written.push_back(name);
    };
    if (in.activity) {
        put("activity_metrics.csv", csv_metrics(*in.activity));
        put("activity_confusion.csv", csv_confusion(*in.activity));
        put("activity_confusion.svg", svg_confusion_heatmap(*in.activity, "activity confusion"));
    } else {
        put("activity_confusion.svg", svg_no_data("activity confusion"));
    }
    if (in.keystroke) {
        put("keystroke_metrics.csv", csv_metrics(in.keystroke->metrics));
        put("keystroke_per_key.csv", csv_per_key(in.keystroke->per_key_top1));
        put("keystroke_per_key.svg",
            svg_per_key_bars(in.keystroke->per_key_top1, "per-key top-1"));
    } else {
        put("keystroke_per_key.svg", svg_no_data("per-key top-1"));
    }
    if (in.passwords) {
        put("password_curves.csv", csv_password_curve(*in.passwords));
        put("password_curves.svg",
            svg_curves({{"top1", in.passwords->top1}, {"top5", in.passwords->top5}},
                       "password recovery"));
    } else {
        put("password_curves.svg", svg_no_data("password recovery"));
    }
    if (!in.obstacle_rows.empty()) {
        put("obstacle_table.csv", csv_obstacle_table(in.obstacle_rows));
    }
    return written;
}

}  // namespace mmvr::harness
