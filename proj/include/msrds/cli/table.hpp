#ifndef MSRDS_CLI_TABLE_HPP
#define MSRDS_CLI_TABLE_HPP

#include <string>
#include <utility>
#include <vector>

namespace msrds::cli {

// Rectangular numeric table with a provenance header. This is the single
// carrier for everything the CLI emits; SVG output is derived from the
// same rows.
struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, std::string>> provenance;

    std::size_t column_index(const std::string& name) const;  // throws if absent
    void add_row(std::vector<double> row);                    // enforces width
};

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace msrds::cli

#endif
