#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

// Plain comma-separated text, no quoting (none of the schemas need it), plus
// the float formatting used by every writer: 17 significant digits, enough to
// round-trip an IEEE double exactly.

namespace rsyield::csv {

std::vector<std::string> split_line(const std::string& line);

// Full-string numeric parses; `context` names the file/row/field in errors.
double parse_double(const std::string& field, const std::string& context);
std::int64_t parse_int(const std::string& field, const std::string& context);

std::string fmt_double(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Reads a whole CSV file; requires the header to equal `expected_header`.
Table read_table(const std::filesystem::path& path,
                 const std::vector<std::string>& expected_header);

std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes via a temp file and rename so readers never observe partial output.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace rsyield::csv
