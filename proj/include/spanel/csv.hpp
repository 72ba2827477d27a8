#pragma once

#include <string>
#include <vector>

namespace spanel {

// Minimal RFC-4180-ish CSV table: header row plus string cells. Numeric
// parsing happens at the call site so errors can name the offending row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // column index by (case-insensitive) name, -1 when absent
    int column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const CsvTable& table);

// strict double parser; throws errc::ingestion with context on failure
double parse_double(const std::string& cell, const std::string& context);
long parse_long(const std::string& cell, const std::string& context);

// shortest round-tripping decimal representation of a double
std::string format_double(double value);

}  // namespace spanel
