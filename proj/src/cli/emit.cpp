#include "msrds/cli/emit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "msrds/errors.hpp"

namespace msrds::cli {

namespace {

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << bytes;
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace

std::string render_csv(const ResultTable& table) {
    for (const auto& row : table.rows)
        if (row.size() != table.columns.size())
            throw std::invalid_argument("render_csv: table is not rectangular");
    std::ostringstream out;
    for (const auto& [key, value] : table.provenance) out << "# " << key << ": " << value << "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out << ",";
        out << table.columns[i];
    }
    out << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ",";
            out << format_double(row[i]);
        }
        out << "\n";
    }
    return out.str();
}

void emit_csv(const ResultTable& table, const std::string& path) {
    write_file(path, render_csv(table));
}

ResultTable parse_csv(const std::string& text) {
    ResultTable table;
    std::istringstream in(text);
    std::string line;
    bool header_done = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            if (!body.empty() && body[0] == ' ') body.erase(0, 1);
            const auto sep = body.find(": ");
            if (sep == std::string::npos)
                table.provenance.emplace_back(body, "");
            else
                table.provenance.emplace_back(body.substr(0, sep), body.substr(sep + 2));
            continue;
        }
        std::vector<std::string> cells;
        std::size_t begin = 0;
        while (true) {
            const auto comma = line.find(',', begin);
            cells.push_back(line.substr(begin, comma - begin));
            if (comma == std::string::npos) break;
            begin = comma + 1;
        }
        if (!header_done) {
            table.columns = cells;
            header_done = true;
            continue;
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            double v = 0.0;
            const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
            if (res.ec != std::errc{} || res.ptr != c.data() + c.size())
                throw IoError("parse_csv: bad number \"" + c + "\"");
            row.push_back(v);
        }
        table.add_row(std::move(row));
    }
    return table;
}

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 560.0;
constexpr double kMarginLeft = 72.0;
constexpr double kMarginRight = 24.0;
constexpr double kMarginTop = 24.0;
constexpr double kMarginBottom = 56.0;

struct Range {
    double lo, hi;
    double map(double v, double pix_lo, double pix_hi) const {
        if (hi == lo) return 0.5 * (pix_lo + pix_hi);
        return pix_lo + (v - lo) / (hi - lo) * (pix_hi - pix_lo);
    }
};

// palette: distinct, readable on white
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string escape_xml(const std::string& s) {
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

}  // namespace

std::string render_svg(const std::vector<SvgSeries>& series, const std::string& x_label,
                       const std::string& y_label,
                       const std::vector<std::pair<std::string, std::string>>& provenance) {
    Range xr{0.0, 1.0}, yr{0.0, 1.0};
    bool any = false;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            if (!any) {
                xr = {x, x};
                yr = {y, y};
                any = true;
            } else {
                xr.lo = std::min(xr.lo, x);
                xr.hi = std::max(xr.hi, x);
                yr.lo = std::min(yr.lo, y);
                yr.hi = std::max(yr.hi, y);
            }
        }
    // pad degenerate ranges so markers stay inside the frame
    if (xr.hi == xr.lo) {
        xr.lo -= 0.5;
        xr.hi += 0.5;
    }
    if (yr.hi == yr.lo) {
        yr.lo -= 0.5;
        yr.hi += 0.5;
    }

    const double px0 = kMarginLeft, px1 = kWidth - kMarginRight;
    const double py0 = kHeight - kMarginBottom, py1 = kMarginTop;  // y grows upward

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    for (const auto& [key, value] : provenance)
        out << "<!-- " << escape_xml(key) << ": " << escape_xml(value) << " -->\n";
    out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";

    // axes
    out << "<line x1=\"" << px0 << "\" y1=\"" << py0 << "\" x2=\"" << px1 << "\" y2=\""
        << py0 << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << px0 << "\" y1=\"" << py0 << "\" x2=\"" << px0 << "\" y2=\""
        << py1 << "\" stroke=\"black\"/>\n";

    const int n_ticks = 5;
    for (int k = 0; k <= n_ticks; ++k) {
        const double f = static_cast<double>(k) / n_ticks;
        const double xv = xr.lo + f * (xr.hi - xr.lo);
        const double yv = yr.lo + f * (yr.hi - yr.lo);
        const double xp = xr.map(xv, px0, px1);
        const double yp = yr.map(yv, py0, py1);
        out << "<line x1=\"" << xp << "\" y1=\"" << py0 << "\" x2=\"" << xp << "\" y2=\""
            << py0 + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << xp << "\" y=\"" << py0 + 18
            << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">"
            << format_double(xv) << "</text>\n";
        out << "<line x1=\"" << px0 - 5 << "\" y1=\"" << yp << "\" x2=\"" << px0
            << "\" y2=\"" << yp << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << px0 - 8 << "\" y=\"" << yp + 4
            << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">"
            << format_double(yv) << "</text>\n";
    }
    out << "<text x=\"" << 0.5 * (px0 + px1) << "\" y=\"" << kHeight - 12
        << "\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\">"
        << escape_xml(x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << 0.5 * (py0 + py1)
        << "\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 16 "
        << 0.5 * (py0 + py1) << ")\">" << escape_xml(y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % (sizeof kColors / sizeof kColors[0])];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].points.size(); ++i) {
            if (i) out << " ";
            out << xr.map(series[s].points[i].first, px0, px1) << ","
                << yr.map(series[s].points[i].second, py0, py1);
        }
        out << "\"/>\n";
        for (const auto& [x, y] : series[s].points)
            out << "<circle cx=\"" << xr.map(x, px0, px1) << "\" cy=\""
                << yr.map(y, py0, py1) << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << px1 - 8 << "\" y=\"" << py1 + 16 + 16 * static_cast<double>(s)
            << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\" fill=\""
            << color << "\">" << escape_xml(series[s].label) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

void emit_svg(const std::vector<SvgSeries>& series, const std::string& x_label,
              const std::string& y_label,
              const std::vector<std::pair<std::string, std::string>>& provenance,
              const std::string& path) {
    write_file(path, render_svg(series, x_label, y_label, provenance));
}

}  // namespace msrds::cli
