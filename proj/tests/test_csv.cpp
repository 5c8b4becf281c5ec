#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "rsyield/csv.hpp"
#include "rsyield/errors.hpp"

using namespace rsyield;
using namespace rsyield::csv;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  fs::path p = fs::temp_directory_path() / "rsyield_csv_test";
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("split_line keeps empty fields and does not trim") {
  CHECK(split_line("a,b,c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_line("a,,c") == std::vector<std::string>{"a", "", "c"});
  CHECK(split_line("a, b") == std::vector<std::string>{"a", " b"});
  CHECK(split_line("") == std::vector<std::string>{""});
  CHECK(split_line(",") == std::vector<std::string>{"", ""});
}

TEST_CASE("parse_double accepts full-string numbers only") {
  CHECK(parse_double("1.5", "ctx") == 1.5);
  CHECK(parse_double("-3e2", "ctx") == -300.0);
  CHECK_THROWS_AS(parse_double("1.5x", "ctx"), ValidationError);
  CHECK_THROWS_AS(parse_double("", "ctx"), ValidationError);
  CHECK_THROWS_AS(parse_double("nan", "ctx"), ValidationError);

  // Errors carry the caller's context so messages can name file/row/field.
  try {
    parse_double("oops", "series.csv row 7 value");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("series.csv row 7 value") != std::string::npos);
  }
}

TEST_CASE("parse_int rejects fractions and garbage") {
  CHECK(parse_int("42", "ctx") == 42);
  CHECK(parse_int("-7", "ctx") == -7);
  CHECK_THROWS_AS(parse_int("4.2", "ctx"), ValidationError);
  CHECK_THROWS_AS(parse_int("x", "ctx"), ValidationError);
  CHECK_THROWS_AS(parse_int("", "ctx"), ValidationError);
}

TEST_CASE("fmt_double round-trips doubles bit-exactly") {
  const double values[] = {0.0,         1.0 / 3.0,     -2.5e-17, 3.141592653589793,
                           1e300,       -4.9e-324,     0.1,      123456789.123456789,
                           -1.0 / 7.0,  2.2250738585072014e-308};
  for (double v : values) {
    const double back = parse_double(fmt_double(v), "round-trip");
    CHECK(back == v);
  }
}

TEST_CASE("read_table enforces the expected header") {
  const fs::path p = temp_dir() / "table.csv";
  {
    std::ofstream out(p);
    out << "a,b\n1,2\n3,4\n";
  }
  Table t = read_table(p, {"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1] == std::vector<std::string>{"3", "4"});

  CHECK_THROWS_AS(read_table(p, {"a", "c"}), ValidationError);
  CHECK_THROWS_AS(read_table(temp_dir() / "missing.csv", {"a"}), ValidationError);
}

TEST_CASE("write_file_atomic leaves no temp file behind and replaces content") {
  const fs::path p = temp_dir() / "atomic.txt";
  write_file_atomic(p, "first\n");
  write_file_atomic(p, "second\n");

  std::ifstream in(p);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content == "second\n");

  int extras = 0;
  for (const auto& entry : fs::directory_iterator(temp_dir())) {
    if (entry.path().filename().string().starts_with("atomic.txt") &&
        entry.path() != p) {
      ++extras;
    }
  }
  CHECK(extras == 0);
}
