// Copyright 2026 The qpu-twin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "io.hpp"

namespace qpu_twin {

namespace {

constexpr double kW = 640.0, kH = 420.0, kLeft = 70.0, kRight = 20.0, kTop = 36.0, kBottom = 50.0;
const char* const kPalette[] = {"#6a3d9a", "#ff7f00", "#1f78b4", "#33a02c", "#e31a1c", "#b15928"};

std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '&': o += "&amp;"; break;
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            default: o += c;
        }
    }
    return o;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish() {
        if (!(lo <= hi)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-300 + 1e-12 * std::abs(hi)) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

std::string frame(const Axes& a, const Range& xr, const Range& yr, bool log_x) {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(kW) + "\" height=\"" + px(kH) +
                    "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + px(kW / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" + esc(a.title) +
         "</text>\n";
    const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
    s += "<rect x=\"" + px(kLeft) + "\" y=\"" + px(kTop) + "\" width=\"" + px(pw) + "\" height=\"" + px(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = xr.lo + (xr.hi - xr.lo) * k / 4.0;
        const double fy = yr.lo + (yr.hi - yr.lo) * k / 4.0;
        const double x = kLeft + pw * k / 4.0, y = kTop + ph * (1.0 - k / 4.0);
        s += "<text x=\"" + px(x) + "\" y=\"" + px(kH - kBottom + 16) + "\" text-anchor=\"middle\">" +
             label(log_x ? std::pow(10.0, fx) : fx) + "</text>\n";
        s += "<text x=\"" + px(kLeft - 6) + "\" y=\"" + px(y + 4) + "\" text-anchor=\"end\">" + label(fy) +
             "</text>\n";
    }
    s += "<text x=\"" + px(kLeft + pw / 2) + "\" y=\"" + px(kH - 10) + "\" text-anchor=\"middle\">" +
         esc(a.xlabel) + "</text>\n";
    s += "<text transform=\"translate(16," + px(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         esc(a.ylabel) + "</text>\n";
    return s;
}

}  // namespace

std::string line_plot(const Axes& a, const std::vector<Series>& series) {
    Range xr, yr;
    auto tx = [&](double x) { return a.log_x ? (x > 0 ? std::log10(x) : std::nan("")) : x; };
    for (const auto& s : series) {
        for (double x : s.x) xr.add(tx(x));
        for (double y : s.y) yr.add(y);
    }
    xr.finish();
    yr.finish();
    const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
    auto sx = [&](double x) { return kLeft + pw * (tx(x) - xr.lo) / (xr.hi - xr.lo); };
    auto sy = [&](double y) { return kTop + ph * (1.0 - (y - yr.lo) / (yr.hi - yr.lo)); };

    std::string out = frame(a, xr, yr, a.log_x);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* colour = kPalette[k % 6];
        if (s.markers) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (std::isfinite(tx(s.x[i])) && std::isfinite(s.y[i])) {
                    out += "<circle cx=\"" + px(sx(s.x[i])) + "\" cy=\"" + px(sy(s.y[i])) + "\" r=\"2.5\" fill=\"" +
                           colour + "\"/>\n";
                }
            }
        } else {
            out += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" + std::string(colour) + "\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (std::isfinite(tx(s.x[i])) && std::isfinite(s.y[i])) {
                    out += px(sx(s.x[i])) + "," + px(sy(s.y[i])) + " ";
                }
            }
            out += "\"/>\n";
        }
        out += "<text x=\"" + px(kW - kRight - 8) + "\" y=\"" + px(kTop + 16 + 14 * k) +
               "\" text-anchor=\"end\" fill=\"" + colour + "\">" + esc(s.name) + "</text>\n";
    }
    for (const auto& s : series) {
        out += "<!-- series " + esc(s.name) + "\nx,y\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            out += fmt(s.x[i]) + "," + fmt(s.y[i]) + "\n";
        }
        out += "-->\n";
    }
    return out + "</svg>\n";
}

std::string heatmap(const Axes& a, const std::vector<double>& xs, const std::vector<double>& ys,
                    const std::vector<std::vector<double>>& z, double zmin, double zmax) {
    Range xr, yr;
    for (double x : xs) xr.add(x);
    for (double y : ys) yr.add(y);
    xr.finish();
    yr.finish();
    const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
    const double cw = pw / std::max<std::size_t>(xs.size(), 1), ch = ph / std::max<std::size_t>(ys.size(), 1);
    std::string out = frame(a, xr, yr, false);
    const double span = zmax > zmin ? zmax - zmin : 1.0;
    for (std::size_t r = 0; r < ys.size(); ++r) {
        for (std::size_t c = 0; c < xs.size(); ++c) {
            const double t = std::clamp((z[r][c] - zmin) / span, 0.0, 1.0);
            // white to purple
            const int red = static_cast<int>(255 - t * (255 - 106)), green = static_cast<int>(255 - t * (255 - 61)),
                      blue = static_cast<int>(255 - t * (255 - 154));
            char fill[8];
            std::snprintf(fill, sizeof fill, "#%02x%02x%02x", red, green, blue);
            out += "<rect x=\"" + px(kLeft + c * cw) + "\" y=\"" + px(kTop + ph - (r + 1) * ch) + "\" width=\"" +
                   px(cw + 0.05) + "\" height=\"" + px(ch + 0.05) + "\" fill=\"" + fill + "\"/>\n";
        }
    }
    out += "<!-- grid\nx,y,z\n";
    for (std::size_t r = 0; r < ys.size(); ++r) {
        for (std::size_t c = 0; c < xs.size(); ++c) {
            out += fmt(xs[c]) + "," + fmt(ys[r]) + "," + fmt(z[r][c]) + "\n";
        }
    }
    return out + "-->\n</svg>\n";
}

}  // namespace qpu_twin
