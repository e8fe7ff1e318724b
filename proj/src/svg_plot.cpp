#include "prism/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "prism/error.hpp"
#include "prism/text_format.hpp"

namespace prism {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string fixed(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::string tick(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

} // namespace

void write_line_plot_svg(std::ostream& out, const std::string& title,
                         const std::vector<PlotLine>& lines, int width, int height)
{
    if (lines.empty()) {
        throw Error(ErrorCode::InvalidConfig, "plot needs at least one line");
    }
    WeekStamp first = lines.front().values.start();
    WeekStamp last = lines.front().values.end();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& l : lines) {
        first = std::min(first, l.values.start());
        last = std::max(last, l.values.end());
        for (double v : l.values.values()) {
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi == lo) {
        hi = lo + 1.0;
    }
    const double left = 70.0;
    const double right = width - 20.0;
    const double top = 40.0;
    const double bottom = height - 40.0;
    const double span = std::max<double>(1.0, static_cast<double>(last - first));
    auto px = [&](WeekStamp w) { return left + (right - left) * static_cast<double>(w - first) / span; };
    auto py = [&](double v) { return bottom - (bottom - top) * (v - lo) / (hi - lo); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
        << escape(title) << "</text>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\"" << bottom
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left << "\" y=\"" << bottom + 18 << "\">" << first.iso() << "</text>\n";
    out << "<text x=\"" << right << "\" y=\"" << bottom + 18 << "\" text-anchor=\"end\">" << last.iso()
        << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << bottom << "\" text-anchor=\"end\">" << tick(lo)
        << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << tick(hi)
        << "</text>\n";
    if (lo < 0.0 && hi > 0.0) {
        out << "<line x1=\"" << left << "\" y1=\"" << fixed(py(0.0)) << "\" x2=\"" << right << "\" y2=\""
            << fixed(py(0.0)) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    }
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const auto& l = lines[k];
        const char* colour = kPalette[k % std::size(kPalette)];
        std::string pts;
        auto flush = [&] {
            if (!pts.empty()) {
                out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.2\" points=\""
                    << pts << "\"/>\n";
                pts.clear();
            }
        };
        for (std::size_t i = 0; i < l.values.size(); ++i) {
            const double v = l.values[i];
            if (!std::isfinite(v)) {
                flush();
                continue;
            }
            if (!pts.empty()) {
                pts += ' ';
            }
            pts += fixed(px(l.values.week(i))) + "," + fixed(py(v));
        }
        flush();
        const double ly = top + 16.0 * static_cast<double>(k);
        out << "<line x1=\"" << right - 150 << "\" y1=\"" << fixed(ly) << "\" x2=\"" << right - 130
            << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << right - 125 << "\" y=\"" << fixed(ly + 4) << "\">" << escape(l.label)
            << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace prism
