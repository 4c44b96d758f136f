#include "loadcnn/date.hpp"

#include <array>
#include <cstdio>

#include "loadcnn/errors.hpp"

namespace loadcnn {

namespace {

// Days-from-civil / civil-from-days after Howard Hinnant's public-domain
// calendar algorithms (proleptic Gregorian).
int days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);             // [0, 399]
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;  // [0, 365]
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;            // [0, 146096]
  return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(int z, int& y, int& m, int& d) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);                 // [0, 146096]
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;   // [0, 399]
  const int yr = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);                 // [0, 365]
  const unsigned mp = (5 * doy + 2) / 153;                                      // [0, 11]
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = yr + (m <= 2);
}

bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

int days_in_month(int y, int m) {
  static constexpr std::array<int, 12> lengths = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return lengths[m - 1];
}

}  // namespace

Date Date::from_ymd(int year, int month, int day) {
  if (month < 1 || month > 12) {
    throw ValueError("month out of range: " + std::to_string(month));
  }
  if (day < 1 || day > days_in_month(year, month)) {
    throw ValueError("day out of range: " + std::to_string(day));
  }
  return Date(days_from_civil(year, month, day));
}

Date Date::from_string(const std::string& iso) {
  int y = 0, m = 0, d = 0;
  char extra = 0;
  if (std::sscanf(iso.c_str(), "%d-%d-%d%c", &y, &m, &d, &extra) != 3) {
    throw ValueError("malformed date (expected YYYY-MM-DD): '" + iso + "'");
  }
  return from_ymd(y, m, d);
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year(), month(), day());
  return buf;
}

Date Date::plus_days(int n) const { return Date(serial_ + n); }

int Date::year() const {
  int y, m, d;
  civil_from_days(serial_, y, m, d);
  return y;
}

int Date::month() const {
  int y, m, d;
  civil_from_days(serial_, y, m, d);
  return m;
}

int Date::day() const {
  int y, m, d;
  civil_from_days(serial_, y, m, d);
  return d;
}

int Date::weekday0() const {
  // Serial 0 (1970-01-01) was a Thursday.
  int w = (serial_ + 3) % 7;
  return w < 0 ? w + 7 : w;
}

}  // namespace loadcnn
