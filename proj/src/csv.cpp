#include "llrm/csv.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "llrm/errors.hpp"

namespace llrm {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

std::vector<CsvRow> read_csv(const std::string& path,
                             const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");

    const std::vector<std::string> want = split_fields(expected_header);
    std::vector<CsvRow> rows;
    std::string line;
    int line_no = 0;
    bool header_seen = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;

        std::vector<std::string> fields = split_fields(stripped);
        if (!header_seen) {
            if (fields != want)
                throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": expected header `" + expected_header +
                                 "`, got `" + stripped + "`");
            header_seen = true;
            continue;
        }
        if (fields.size() != want.size())
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(want.size()) + " fields, got " +
                             std::to_string(fields.size()));
        rows.push_back(CsvRow{line_no, std::move(fields)});
    }
    if (!header_seen)
        throw ParseError(path + ": missing header `" + expected_header + "`");
    return rows;
}

double parse_double(const std::string& path, const CsvRow& row, int field) {
    const std::string& s = row.fields[size_t(field)];
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(path + ":" + std::to_string(row.line_no) +
                         ": `" + s + "` is not a number");
    return value;
}

int parse_int(const std::string& path, const CsvRow& row, int field) {
    const std::string& s = row.fields[size_t(field)];
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(path + ":" + std::to_string(row.line_no) +
                         ": `" + s + "` is not an integer");
    return value;
}

} // namespace llrm
