#include "msrds/cli/table.hpp"

#include <charconv>
#include <stdexcept>

namespace msrds::cli {

std::size_t ResultTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw std::invalid_argument("ResultTable: no column named " + name);
}

void ResultTable::add_row(std::vector<double> row) {
    if (row.size() != columns.size())
        throw std::invalid_argument("ResultTable: row width does not match columns");
    rows.push_back(std::move(row));
}

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

}  // namespace msrds::cli
