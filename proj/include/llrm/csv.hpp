#pragma once

#include <string>
#include <vector>

namespace llrm {

struct CsvRow {
    int line_no = 0;                  // 1-based line in the source file
    std::vector<std::string> fields;
};

// Reads a comma-separated file with a mandatory header line.
// `#`-prefixed lines and blank lines are ignored anywhere in the file.
// Throws ParseError if the file is missing, the header does not match
// `expected_header` exactly, or any row has the wrong field count.
std::vector<CsvRow> read_csv(const std::string& path,
                             const std::string& expected_header);

// Field parsers that raise ParseError with file/line context on bad input.
double parse_double(const std::string& path, const CsvRow& row, int field);
int parse_int(const std::string& path, const CsvRow& row, int field);

} // namespace llrm
