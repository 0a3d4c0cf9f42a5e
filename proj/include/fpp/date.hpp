#pragma once

#include <chrono>
#include <compare>
#include <cstdio>
#include <string>

#include "fpp/error.hpp"

namespace fpp {

/// Proleptic Gregorian calendar day. Sample time is implicitly 12Z.
class Date {
 public:
  Date() = default;
  Date(int y, unsigned m, unsigned d) : days_(from_ymd(y, m, d)) {}

  static Date from_days(long serial) {
    Date out;
    out.days_ = serial;
    return out;
  }

  static Date parse(const std::string& iso) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    if (std::sscanf(iso.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) {
      throw Error(ErrorKind::Format, "malformed ISO-8601 date '" + iso + "'");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw Error(ErrorKind::Format, "invalid calendar date '" + iso + "'");
    return Date(y, m, d);
  }

  /// Days since 1970-01-01.
  long serial() const noexcept { return days_; }

  std::chrono::year_month_day ymd() const {
    return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{days_}}};
  }

  int year() const { return static_cast<int>(ymd().year()); }
  unsigned month() const { return static_cast<unsigned>(ymd().month()); }
  unsigned day() const { return static_cast<unsigned>(ymd().day()); }

  std::string iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(), month(), day());
    return buf;
  }

  Date operator+(long n) const { return from_days(days_ + n); }
  Date operator-(long n) const { return from_days(days_ - n); }
  long operator-(const Date& o) const { return days_ - o.days_; }

  auto operator<=>(const Date&) const = default;

 private:
  static long from_ymd(int y, unsigned m, unsigned d) {
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw Error(ErrorKind::Domain, "invalid calendar date");
    return std::chrono::sys_days{ymd}.time_since_epoch().count();
  }

  long days_ = 0;
};

}  // namespace fpp
