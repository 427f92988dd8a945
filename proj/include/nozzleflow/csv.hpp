#pragma once

// Comma-separated tables of doubles. Values are written with the shortest
// representation that round-trips (std::to_chars), so write -> read is
// bit-exact and reruns diff clean.

#include <string>
#include <vector>

namespace nozzleflow::csvio {

std::string format_double(double v);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const;  // -1 if absent
};

// Parses a header line plus numeric rows; throws std::runtime_error with
// line numbers on malformed input or ragged rows.
Table parse_table(const std::string& text, const std::string& origin);
Table read_table(const std::string& path);

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<double>>& rows);
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows);

}  // namespace nozzleflow::csvio
