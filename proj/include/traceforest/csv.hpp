#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace traceforest {

struct CsvRow {
    std::size_t line = 0; // 1-based line number of the row's first physical line
    std::vector<std::string> cells;
};

struct CsvContent {
    std::vector<std::string> header;
    std::vector<CsvRow> rows;
};

// Reads a comma-separated file with a mandatory header line. Double-quoted
// cells may contain commas, doubled quotes, and line breaks. Throws
// SchemaError when the stream holds no header at all.
CsvContent read_csv(std::istream& in, const std::string& source_name);

CsvContent read_csv_file(const std::string& path);

// Writes one row, quoting cells only when needed.
void write_csv_row(std::ostream& out, const std::vector<std::string>& cells);

} // namespace traceforest
