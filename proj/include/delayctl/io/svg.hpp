// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/io/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace delayctl {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool scatter = false;
};

/// Line and scatter plots with linear or log axes, as a standalone SVG document.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string xlabel, std::string ylabel)
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

    SvgPlot& add(SvgSeries s) {
        if (s.x.size() != s.y.size()) throw DimensionError("SvgPlot: x and y lengths differ");
        series_.push_back(std::move(s));
        return *this;
    }
    SvgPlot& log_x(bool on = true) {
        logx_ = on;
        return *this;
    }
    SvgPlot& log_y(bool on = true) {
        logy_ = on;
        return *this;
    }

    [[nodiscard]] std::string str() const {
        double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
        for (const auto& s : series_)
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!usable(s.x[i], logx_) || !usable(s.y[i], logy_)) continue;
                x0 = std::min(x0, tx(s.x[i]));
                x1 = std::max(x1, tx(s.x[i]));
                y0 = std::min(y0, ty(s.y[i]));
                y1 = std::max(y1, ty(s.y[i]));
            }
        if (!(x1 >= x0)) x0 = 0, x1 = 1;
        if (!(y1 >= y0)) y0 = 0, y1 = 1;
        if (x1 == x0) x0 -= 0.5, x1 += 0.5;
        if (y1 == y0) y0 -= 0.5, y1 += 0.5;
        const double W = 640, H = 420, L = 70, R = 150, T = 40, B = 50;
        const auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
        const auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };
        std::ostringstream o;
        o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
          << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title_)
          << "</text>\n";
        o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
          << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int k = 0; k <= 4; ++k) {
            const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
            const double sx = L + (W - L - R) * k / 4.0, sy = H - B - (H - T - B) * k / 4.0;
            o << "<text x=\"" << num(sx) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
              << tick(logx_ ? std::pow(10.0, fx) : fx) << "</text>\n";
            o << "<text x=\"" << L - 6 << "\" y=\"" << num(sy + 4) << "\" text-anchor=\"end\">"
              << tick(logy_ ? std::pow(10.0, fy) : fy) << "</text>\n";
        }
        o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape(xlabel_)
          << "</text>\n";
        o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
          << (T + H - B) / 2 << ")\">" << escape(ylabel_) << "</text>\n";
        static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
        for (std::size_t k = 0; k < series_.size(); ++k) {
            const auto& s = series_[k];
            const char* c = colours[k % 6];
            if (s.scatter) {
                for (std::size_t i = 0; i < s.x.size(); ++i)
                    if (usable(s.x[i], logx_) && usable(s.y[i], logy_))
                        o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3\" fill=\""
                          << c << "\"/>\n";
            } else {
                o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
                for (std::size_t i = 0; i < s.x.size(); ++i)
                    if (usable(s.x[i], logx_) && usable(s.y[i], logy_))
                        o << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
                o << "\"/>\n";
            }
            const double ly = T + 14 + 18.0 * static_cast<double>(k);
            o << "<rect x=\"" << W - R + 10 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"3\" fill=\"" << c
              << "\"/>\n<text x=\"" << W - R + 28 << "\" y=\"" << ly << "\">" << escape(s.label) << "</text>\n";
        }
        o << "</svg>\n";
        return o.str();
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ValidationError("cannot write " + path);
        f << str();
    }

private:
    static bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }
    double tx(double v) const { return logx_ ? std::log10(v) : v; }
    double ty(double v) const { return logy_ ? std::log10(v) : v; }
    static std::string num(double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.2f", v);
        return b;
    }
    static std::string tick(double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.3g", v);
        return b;
    }
    static std::string escape(const std::string& s) {
        std::string o;
        for (char c : s) {
            if (c == '<') o += "&lt;";
            else if (c == '>') o += "&gt;";
            else if (c == '&') o += "&amp;";
            else o += c;
        }
        return o;
    }

    std::string title_, xlabel_, ylabel_;
    std::vector<SvgSeries> series_;
    bool logx_ = false, logy_ = false;
};

/// Plots columns of a CSV table against one x column.
[[nodiscard]] inline SvgPlot plot_csv(const CsvData& d, const std::string& x, const std::vector<std::string>& ys,
                                      const std::string& title, bool scatter = false) {
    SvgPlot p(title, x, ys.size() == 1 ? ys.front() : "value");
    const int xi = d.column(x);
    for (const auto& y : ys) {
        const int yi = d.column(y);
        SvgSeries s{y, {}, {}, scatter};
        for (const auto& r : d.rows) {
            s.x.push_back(std::strtod(r[static_cast<std::size_t>(xi)].c_str(), nullptr));
            s.y.push_back(std::strtod(r[static_cast<std::size_t>(yi)].c_str(), nullptr));
        }
        p.add(std::move(s));
    }
    return p;
}

}  // namespace delayctl
