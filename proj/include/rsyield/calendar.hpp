#pragma once

#include <cstdint>
#include <string>
#include <string_view>

// Civil-date and ISO-week arithmetic.  Days are counted from 1970-01-01,
// weeks from the ISO week containing that date (1970-W01, whose Monday is
// 1969-12-29, day -3).

namespace rsyield::calendar {

struct CivilDate {
  int year;
  unsigned month;  // 1..12
  unsigned day;    // 1..31
};

std::int64_t days_from_civil(int year, unsigned month, unsigned day);
CivilDate civil_from_days(std::int64_t days);

// "YYYY-MM-DD" -> days since epoch.  Throws ValidationError on malformed input.
std::int64_t parse_iso_date(std::string_view text);
std::string format_iso_date(std::int64_t days);

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

// Week index of the ISO week containing the given day.
inline std::int64_t week_of_day(std::int64_t days) { return floor_div(days + 3, 7); }

// Monday 00:00 of the given week, as days since epoch.
inline std::int64_t monday_of_week(std::int64_t week) { return 7 * week - 3; }

}  // namespace rsyield::calendar
