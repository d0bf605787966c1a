#include "uqcast/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "uqcast/csv.hpp"
#include "uqcast/errors.hpp"

namespace uqcast {

namespace {

constexpr double kWidth = 920.0, kHeight = 420.0;
constexpr double kLeft = 64.0, kRight = 20.0, kTop = 36.0, kBottom = 48.0;

std::string pt(double x, double y) { return fmt_double(x) + "," + fmt_double(y); }

// round to 3 decimals so coordinates stay short and stable
double r3(double v) { return std::round(v * 1000.0) / 1000.0; }

} // namespace

void write_band_chart_svg(const BandChart& chart, const std::string& path) {
    const size_t n = chart.x.size();
    if (n < 2 || chart.y_true.size() != n || chart.y_mean.size() != n ||
        chart.lower.size() != n || chart.upper.size() != n)
        throw ShapeError("band chart: series lengths inconsistent or too short");

    double x_lo = chart.x[0], x_hi = chart.x[0];
    double y_lo = chart.lower[0], y_hi = chart.upper[0];
    for (size_t i = 0; i < n; ++i) {
        x_lo = std::min(x_lo, chart.x[i]);
        x_hi = std::max(x_hi, chart.x[i]);
        y_lo = std::min({y_lo, chart.lower[i], chart.y_true[i]});
        y_hi = std::max({y_hi, chart.upper[i], chart.y_true[i]});
    }
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;
    if (y_hi <= y_lo) y_hi = y_lo + 1.0;
    const double pad = 0.04 * (y_hi - y_lo);
    y_lo -= pad;
    y_hi += pad;

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto sx = [&](double v) { return r3(kLeft + (v - x_lo) / (x_hi - x_lo) * pw); };
    auto sy = [&](double v) { return r3(kTop + (1.0 - (v - y_lo) / (y_hi - y_lo)) * ph); };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_double(kWidth)
        << "\" height=\"" << fmt_double(kHeight) << "\" viewBox=\"0 0 " << fmt_double(kWidth)
        << " " << fmt_double(kHeight) << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // shaded 95% band
    out << "<path d=\"M";
    for (size_t i = 0; i < n; ++i)
        out << ' ' << pt(sx(chart.x[i]), sy(chart.upper[i]));
    for (size_t i = n; i-- > 0;) out << ' ' << pt(sx(chart.x[i]), sy(chart.lower[i]));
    out << " Z\" fill=\"#d95f5f\" fill-opacity=\"0.30\" stroke=\"none\"/>\n";

    auto polyline = [&](const std::vector<double>& ys, const char* color, const char* width) {
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width
            << "\" points=\"";
        for (size_t i = 0; i < n; ++i) {
            if (i) out << ' ';
            out << pt(sx(chart.x[i]), sy(ys[i]));
        }
        out << "\"/>\n";
    };
    polyline(chart.y_true, "#202020", "1.2");
    polyline(chart.y_mean, "#c0392b", "1.4");

    // axes
    out << "<line x1=\"" << fmt_double(kLeft) << "\" y1=\"" << fmt_double(kTop + ph) << "\" x2=\""
        << fmt_double(kLeft + pw) << "\" y2=\"" << fmt_double(kTop + ph)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << fmt_double(kLeft) << "\" y1=\"" << fmt_double(kTop) << "\" x2=\""
        << fmt_double(kLeft) << "\" y2=\"" << fmt_double(kTop + ph)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int k = 0; k <= 6; ++k) {
        const double xv = x_lo + (x_hi - x_lo) * k / 6.0;
        const double px = sx(xv);
        out << "<line x1=\"" << fmt_double(px) << "\" y1=\"" << fmt_double(kTop + ph) << "\" x2=\""
            << fmt_double(px) << "\" y2=\"" << fmt_double(kTop + ph + 5)
            << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << fmt_double(px) << "\" y=\"" << fmt_double(kTop + ph + 20)
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
            << fmt_double(r3(xv)) << "</text>\n";
    }
    for (int k = 0; k <= 5; ++k) {
        const double yv = y_lo + (y_hi - y_lo) * k / 5.0;
        const double py = sy(yv);
        out << "<line x1=\"" << fmt_double(kLeft - 5) << "\" y1=\"" << fmt_double(py) << "\" x2=\""
            << fmt_double(kLeft) << "\" y2=\"" << fmt_double(py)
            << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        out << "<text x=\"" << fmt_double(kLeft - 8) << "\" y=\"" << fmt_double(py + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
            << fmt_double(std::round(yv)) << "</text>\n";
    }

    out << "<text x=\"" << fmt_double(kLeft + pw / 2) << "\" y=\"18\" font-family=\"sans-serif\""
        << " font-size=\"13\" text-anchor=\"middle\">" << chart.title << "</text>\n";
    out << "<text x=\"" << fmt_double(kLeft + pw / 2) << "\" y=\"" << fmt_double(kHeight - 10)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
        << chart.x_label << "</text>\n";
    out << "<text x=\"16\" y=\"" << fmt_double(kTop + ph / 2)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\""
        << " transform=\"rotate(-90 16 " << fmt_double(kTop + ph / 2) << ")\">" << chart.y_label
        << "</text>\n";

    // legend
    const double lx = kLeft + 10, ly = kTop + 10;
    out << "<rect x=\"" << fmt_double(lx) << "\" y=\"" << fmt_double(ly)
        << "\" width=\"170\" height=\"54\" fill=\"white\" fill-opacity=\"0.8\""
        << " stroke=\"#999\"/>\n";
    out << "<line x1=\"" << fmt_double(lx + 8) << "\" y1=\"" << fmt_double(ly + 14) << "\" x2=\""
        << fmt_double(lx + 34) << "\" y2=\"" << fmt_double(ly + 14)
        << "\" stroke=\"#202020\" stroke-width=\"1.2\"/>\n";
    out << "<text x=\"" << fmt_double(lx + 40) << "\" y=\"" << fmt_double(ly + 18)
        << "\" font-family=\"sans-serif\" font-size=\"11\">observed</text>\n";
    out << "<line x1=\"" << fmt_double(lx + 8) << "\" y1=\"" << fmt_double(ly + 30) << "\" x2=\""
        << fmt_double(lx + 34) << "\" y2=\"" << fmt_double(ly + 30)
        << "\" stroke=\"#c0392b\" stroke-width=\"1.4\"/>\n";
    out << "<text x=\"" << fmt_double(lx + 40) << "\" y=\"" << fmt_double(ly + 34)
        << "\" font-family=\"sans-serif\" font-size=\"11\">mean prediction</text>\n";
    out << "<rect x=\"" << fmt_double(lx + 8) << "\" y=\"" << fmt_double(ly + 40)
        << "\" width=\"26\" height=\"8\" fill=\"#d95f5f\" fill-opacity=\"0.30\"/>\n";
    out << "<text x=\"" << fmt_double(lx + 40) << "\" y=\"" << fmt_double(ly + 48)
        << "\" font-family=\"sans-serif\" font-size=\"11\">95% interval</text>\n";
    out << "</svg>\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

} // namespace uqcast
