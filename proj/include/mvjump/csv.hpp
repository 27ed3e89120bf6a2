#pragma once

#include <string>
#include <vector>

namespace mvjump::csv {

/// Shortest-faithful decimal form of a double ("%.17g"); keeps CSV output
/// byte-stable across runs.
std::string format_double(double v);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

void write(const std::string& path, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& rows);

Table read(const std::string& path);

}  // namespace mvjump::csv
