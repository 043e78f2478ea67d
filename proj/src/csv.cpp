#include "traceforest/csv.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "traceforest/errors.hpp"

namespace traceforest {

namespace {

// Pulls the next record off the stream. Quoted cells may span lines, so this
// cannot simply getline(). Returns false at end of input.
bool next_record(std::istream& in, std::size_t& line_counter, CsvRow& out) {
    int c = in.peek();
    if (c == EOF) return false;

    out.line = line_counter;
    out.cells.clear();
    std::string cell;
    bool in_quotes = false;
    bool any_char = false;

    while (true) {
        c = in.get();
        if (c == EOF) {
            if (!any_char && out.cells.empty()) return false;
            out.cells.push_back(std::move(cell));
            return true;
        }
        any_char = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get();
                    cell += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_counter;
                cell += static_cast<char>(c);
            }
        } else if (c == '"' && cell.empty()) {
            in_quotes = true;
        } else if (c == ',') {
            out.cells.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\n') {
            ++line_counter;
            if (!cell.empty() && cell.back() == '\r') cell.pop_back();
            out.cells.push_back(std::move(cell));
            return true;
        } else {
            cell += static_cast<char>(c);
        }
    }
}

} // namespace

CsvContent read_csv(std::istream& in, const std::string& source_name) {
    CsvContent content;
    std::size_t line_counter = 1;
    CsvRow header_row;
    if (!next_record(in, line_counter, header_row) || header_row.cells.empty() ||
        (header_row.cells.size() == 1 && header_row.cells[0].empty())) {
        throw SchemaError("missing header in " + source_name);
    }
    content.header = std::move(header_row.cells);

    CsvRow row;
    while (next_record(in, line_counter, row)) {
        if (row.cells.size() == 1 && row.cells[0].empty()) continue; // blank line
        content.rows.push_back(std::move(row));
        row = CsvRow{};
    }
    return content;
}

CsvContent read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_csv(in, path);
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out << ',';
        const std::string& cell = cells[i];
        bool needs_quotes = cell.find_first_of(",\"\n\r") != std::string::npos;
        if (!needs_quotes) {
            out << cell;
            continue;
        }
        out << '"';
        for (char c : cell) {
            if (c == '"') out << "\"\"";
            else out << c;
        }
        out << '"';
    }
    out << '\n';
}

} // namespace traceforest
