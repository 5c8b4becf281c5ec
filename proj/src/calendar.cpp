#include "rsyield/calendar.hpp"

#include <cstdio>

#include "rsyield/errors.hpp"

namespace rsyield::calendar {

// Howard Hinnant's proleptic Gregorian algorithms.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);            // [0, 399]
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;  // [0, 365]
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;           // [0, 146096]
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (m <= 2)), m, d};
}

std::int64_t parse_iso_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  const std::string buf(text);
  if (std::sscanf(buf.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3 || buf.size() != 10 ||
      buf[4] != '-' || buf[7] != '-') {
    throw ValidationError("malformed ISO date: '" + buf + "'");
  }
  if (m < 1 || m > 12 || d < 1 || d > 31) {
    throw ValidationError("out-of-range ISO date: '" + buf + "'");
  }
  const std::int64_t days = days_from_civil(y, m, d);
  const CivilDate back = civil_from_days(days);
  if (back.year != y || back.month != m || back.day != d) {
    throw ValidationError("invalid calendar date: '" + buf + "'");
  }
  return days;
}

std::string format_iso_date(std::int64_t days) {
  const CivilDate c = civil_from_days(days);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", c.year, c.month, c.day);
  return buf;
}

}  // namespace rsyield::calendar
