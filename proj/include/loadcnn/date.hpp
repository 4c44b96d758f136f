#pragma once

#include <compare>
#include <string>

namespace loadcnn {

/// Calendar date stored as a day serial (days since 1970-01-01).
/// Self-contained civil-calendar arithmetic; no locale or timezone involved.
class Date {
 public:
  Date() = default;

  static Date from_ymd(int year, int month, int day);

  /// Parses "YYYY-MM-DD"; throws ValueError on malformed or invalid dates.
  static Date from_string(const std::string& iso);

  std::string to_string() const;

  Date plus_days(int n) const;

  /// Days from other to *this (this - other).
  int days_since(const Date& other) const { return serial_ - other.serial_; }

  int year() const;
  int month() const;  // 1..12
  int day() const;    // 1..31

  int month0() const { return month() - 1; }
  int day0() const { return day() - 1; }
  /// Monday = 0 ... Sunday = 6.
  int weekday0() const;

  bool is_weekend() const { return weekday0() >= 5; }

  auto operator<=>(const Date&) const = default;

 private:
  explicit Date(int serial) : serial_(serial) {}
  int serial_ = 0;
};

}  // namespace loadcnn
