#ifndef MSRDS_CLI_EMIT_HPP
#define MSRDS_CLI_EMIT_HPP

#include <string>
#include <vector>

#include "msrds/cli/table.hpp"

namespace msrds::cli {

// CSV layout: '#'-prefixed "key: value" provenance lines, a header row,
// then comma-separated rows in shortest round-trip decimals. Output is a
// pure function of the table, so identical runs emit identical bytes.
std::string render_csv(const ResultTable& table);
void emit_csv(const ResultTable& table, const std::string& path);

// Inverse of render_csv (exact: values round-trip bitwise).
ResultTable parse_csv(const std::string& text);

// One plotted series: polyline vertices in data coordinates.
struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

// Standalone SVG line plot: axes, tick labels, one polyline per series
// and circle markers on the vertices. No external references.
std::string render_svg(const std::vector<SvgSeries>& series, const std::string& x_label,
                       const std::string& y_label,
                       const std::vector<std::pair<std::string, std::string>>& provenance);
void emit_svg(const std::vector<SvgSeries>& series, const std::string& x_label,
              const std::string& y_label,
              const std::vector<std::pair<std::string, std::string>>& provenance,
              const std::string& path);

}  // namespace msrds::cli

#endif
