#pragma once

// Static SVG emission for experiment records: log-log scaling fits, the
// exponent tradeoff curve, and coarea lhs/rhs agreement.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gmtlab/experiment.hpp"

namespace gmtlab {

enum class PlotKind { Scaling, Tradeoff, Coarea };

inline PlotKind plot_kind_from_string(const std::string& s) {
    if (s == "scaling") return PlotKind::Scaling;
    if (s == "tradeoff") return PlotKind::Tradeoff;
    if (s == "coarea") return PlotKind::Coarea;
    throw std::invalid_argument("unknown plot kind '" + s + "' (scaling|tradeoff|coarea)");
}

namespace svgdetail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Frame {
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    static constexpr double width = 640, height = 480, margin = 64;

    void fit(const std::vector<std::pair<double, double>>& pts) {
        if (pts.empty()) return;
        xmin = ymin = std::numeric_limits<double>::infinity();
        xmax = ymax = -std::numeric_limits<double>::infinity();
        for (auto [x, y] : pts) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
        auto pad = [](double& lo, double& hi) {
            double d = hi - lo;
            if (d <= 0) d = std::max(std::abs(hi), 1.0);
            lo -= 0.08 * d;
            hi += 0.08 * d;
        };
        pad(xmin, xmax);
        pad(ymin, ymax);
    }

    double px(double x) const { return margin + (x - xmin) / (xmax - xmin) * (width - 2 * margin); }
    double py(double y) const {
        return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin);
    }
};

inline void open_svg(std::ostringstream& os) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
          "viewBox=\"0 0 640 480\">\n"
          "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
}

inline void axes(std::ostringstream& os, const Frame& f, const std::string& xlabel,
                 const std::string& ylabel) {
    os << "<g stroke=\"black\" fill=\"none\">\n"
       << "<path d=\"M " << f.margin << ' ' << Frame::height - f.margin << " H "
       << Frame::width - f.margin << "\"/>\n"
       << "<path d=\"M " << f.margin << ' ' << Frame::height - f.margin << " V " << f.margin
       << "\"/>\n</g>\n";
    for (int i = 0; i <= 4; ++i) {
        const double x = f.xmin + (f.xmax - f.xmin) * i / 4;
        const double y = f.ymin + (f.ymax - f.ymin) * i / 4;
        os << "<text x=\"" << num(f.px(x)) << "\" y=\"" << Frame::height - f.margin + 18
           << "\" font-size=\"11\" text-anchor=\"middle\">" << num(x) << "</text>\n";
        os << "<text x=\"" << f.margin - 8 << "\" y=\"" << num(f.py(y) + 4)
           << "\" font-size=\"11\" text-anchor=\"end\">" << num(y) << "</text>\n";
    }
    os << "<text x=\"" << Frame::width / 2 << "\" y=\"" << Frame::height - 16
       << "\" font-size=\"13\" text-anchor=\"middle\">" << xlabel << "</text>\n";
    os << "<text x=\"18\" y=\"" << Frame::height / 2
       << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << Frame::height / 2 << ")\">" << ylabel << "</text>\n";
}

inline void scatter(std::ostringstream& os, const Frame& f,
                    const std::vector<std::pair<double, double>>& pts, const char* color) {
    for (auto [x, y] : pts)
        os << "<circle cx=\"" << num(f.px(x)) << "\" cy=\"" << num(f.py(y))
           << "\" r=\"3\" fill=\"" << color << "\"/>\n";
}

inline void line(std::ostringstream& os, const Frame& f, double x0, double y0, double x1,
                 double y1, const char* color, const char* dash = nullptr) {
    os << "<line x1=\"" << num(f.px(x0)) << "\" y1=\"" << num(f.py(y0)) << "\" x2=\""
       << num(f.px(x1)) << "\" y2=\"" << num(f.py(y1)) << "\" stroke=\"" << color << "\"";
    if (dash) os << " stroke-dasharray=\"" << dash << "\"";
    os << "/>\n";
}

inline std::pair<double, double> least_squares(const std::vector<std::pair<double, double>>& pts) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    const double den = n * sxx - sx * sx;
    if (std::abs(den) < 1e-14) return {0.0, pts.empty() ? 0.0 : sy / n};
    const double slope = (n * sxy - sx * sy) / den;
    return {slope, (sy - slope * sx) / n};
}

} // namespace svgdetail

inline std::string render_plot(const std::vector<ExperimentRecord>& records, PlotKind kind) {
    if (records.empty()) throw std::invalid_argument("render_plot: empty record set");
    using namespace svgdetail;
    std::ostringstream os;
    open_svg(os);
    Frame f;

    switch (kind) {
        case PlotKind::Scaling: {
            std::vector<std::pair<double, double>> pts;
            for (const auto& r : records)
                if (r.measured > 0 && r.resolution > 0)
                    pts.emplace_back(std::log10(1.0 / r.resolution), std::log10(r.measured));
            if (pts.empty()) throw std::invalid_argument("render_plot: no positive values");
            f.fit(pts);
            axes(os, f, "log10 ell(Q)", "log10 phi");
            auto [slope, icept] = least_squares(pts);
            line(os, f, f.xmin, slope * f.xmin + icept, f.xmax, slope * f.xmax + icept, "steelblue");
            scatter(os, f, pts, "black");
            os << "<text x=\"" << Frame::width - f.margin - 4 << "\" y=\"" << f.margin + 14
               << "\" font-size=\"12\" text-anchor=\"end\">slope " << num(slope) << " (predicted "
               << num(records.front().predicted) << ")</text>\n";
            break;
        }
        case PlotKind::Tradeoff: {
            // measured decay exponent per q against the mu_q reference line
            std::map<double, std::vector<std::pair<double, double>>> per_q;
            std::map<double, double> mu_of;
            for (const auto& r : records) {
                if (r.experiment.find("borderline") != std::string::npos) continue;
                if (r.measured > 0)
                    per_q[r.q].emplace_back(r.depth * std::log(2.0), std::log(r.measured));
                mu_of[r.q] = r.mu;
            }
            std::vector<std::pair<double, double>> pts, ref;
            for (auto& [q, samples] : per_q) {
                if (samples.size() >= 2) {
                    auto [slope, icept] = least_squares(samples);
                    pts.emplace_back(q, -slope);  // content ~ 2^{-L mu-hat}
                }
            }
            for (auto& [q, mu] : mu_of) ref.emplace_back(q, mu);
            if (pts.empty() && ref.empty())
                throw std::invalid_argument("render_plot: nothing to plot");
            std::vector<std::pair<double, double>> all = pts;
            all.insert(all.end(), ref.begin(), ref.end());
            f.fit(all);
            axes(os, f, "q", "preimage decay exponent");
            for (size_t i = 0; i + 1 < ref.size(); ++i)
                line(os, f, ref[i].first, ref[i].second, ref[i + 1].first, ref[i + 1].second,
                     "firebrick", "4 3");
            scatter(os, f, pts, "black");
            os << "<text x=\"" << Frame::width - f.margin - 4 << "\" y=\"" << f.margin + 14
               << "\" font-size=\"12\" text-anchor=\"end\">reference slope "
               << num(ref.size() >= 2 ? (ref.back().second - ref.front().second) /
                                            (ref.back().first - ref.front().first)
                                      : 0.0)
               << "</text>\n";
            break;
        }
        case PlotKind::Coarea: {
            std::map<int, std::pair<double, double>> by_res;  // resolution -> (lhs, rhs)
            for (const auto& r : records) {
                if (r.experiment.size() > 4 &&
                    r.experiment.rfind(":lhs") == r.experiment.size() - 4)
                    by_res[r.resolution].first = r.measured;
                if (r.experiment.size() > 4 &&
                    r.experiment.rfind(":rhs") == r.experiment.size() - 4)
                    by_res[r.resolution].second = r.measured;
            }
            std::vector<std::pair<double, double>> pts;
            for (auto& [res, lr] : by_res) pts.push_back(lr);
            if (pts.empty()) throw std::invalid_argument("render_plot: no coarea pairs");
            f.fit(pts);
            axes(os, f, "lhs", "rhs");
            line(os, f, std::max(f.xmin, f.ymin), std::max(f.xmin, f.ymin),
                 std::min(f.xmax, f.ymax), std::min(f.xmax, f.ymax), "firebrick", "4 3");
            scatter(os, f, pts, "black");
            break;
        }
    }
    os << "</svg>\n";
    return os.str();
}

inline void emit_plot(const std::vector<ExperimentRecord>& records, PlotKind kind,
                      const std::string& path) {
    const std::string svg = render_plot(records, kind);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_plot: cannot open " + path);
    out << svg;
    if (!out) throw std::runtime_error("emit_plot: write failed for " + path);
}

} // namespace gmtlab
