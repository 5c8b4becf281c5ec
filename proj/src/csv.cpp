#include "rsyield/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "rsyield/errors.hpp"

namespace rsyield::csv {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_double(const std::string& field, const std::string& context) {
  if (field.empty()) throw ValidationError(context + ": empty numeric field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  // Underflow to a denormal still round-trips exactly; overflow and the
  // nan/inf spellings have no place in the data files.
  if (end != field.c_str() + field.size() || !std::isfinite(v)) {
    throw ValidationError(context + ": not a finite number: '" + field + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& field, const std::string& context) {
  if (field.empty()) throw ValidationError(context + ": empty integer field");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(field.c_str(), &end, 10);
  if (end != field.c_str() + field.size() || errno == ERANGE) {
    throw ValidationError(context + ": not an integer: '" + field + "'");
  }
  return v;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

Table read_table(const std::filesystem::path& path,
                 const std::vector<std::string>& expected_header) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw ValidationError(path.string() + ": empty file");
  Table t;
  t.header = split_line(lines[0]);
  if (t.header != expected_header) {
    std::ostringstream msg;
    msg << path.string() << ": unexpected header '" << lines[0] << "'";
    throw ValidationError(msg.str());
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;  // tolerate a trailing blank line
    std::vector<std::string> fields = split_line(lines[i]);
    if (fields.size() != expected_header.size()) {
      std::ostringstream msg;
      msg << path.string() << " row " << i + 1 << ": expected " << expected_header.size()
          << " fields, got " << fields.size();
      throw ValidationError(msg.str());
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open file for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ValidationError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace rsyield::csv
