#pragma once

#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mailweave/error.hpp"

namespace mailweave {

/// A calendar day (proleptic Gregorian, no time zone).
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}

  /// Throws DateError when the triple is not a real calendar day.
  static Date from_ymd(int year, unsigned month, unsigned day) {
    std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                    std::chrono::day{day}};
    if (!ymd.ok() || year < 1 || year > 9999) {
      throw DateError("invalid calendar date " + std::to_string(year) + "-" +
                      std::to_string(month) + "-" + std::to_string(day));
    }
    return Date{std::chrono::sys_days{ymd}};
  }

  constexpr std::chrono::sys_days days() const noexcept { return days_; }
  std::chrono::year_month_day ymd() const noexcept { return std::chrono::year_month_day{days_}; }

  Date plus_days(int n) const noexcept { return Date{days_ + std::chrono::days{n}}; }

  /// YYYY-MM-DD
  std::string iso() const {
    const auto ymd = this->ymd();
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
  }

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

using Timestamp = std::chrono::sys_seconds;

namespace detail {

inline bool parse_uint(std::string_view s, int& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end && out >= 0;
}

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::optional<Date> make_date(int y, int m, int d) {
  if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || y < 1 || y > 9999) return std::nullopt;
  return Date{std::chrono::sys_days{ymd}};
}

}  // namespace detail

/// Strict YYYY-MM-DD.
inline std::optional<Date> parse_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!detail::all_digits(s.substr(0, 4)) || !detail::all_digits(s.substr(5, 2)) ||
      !detail::all_digits(s.substr(8, 2))) {
    return std::nullopt;
  }
  detail::parse_uint(s.substr(0, 4), y);
  detail::parse_uint(s.substr(5, 2), m);
  detail::parse_uint(s.substr(8, 2), d);
  return detail::make_date(y, m, d);
}

/// Accepts Y-M-D with unpadded month and day ("2004-6-6"). When the middle
/// field cannot be a month but the last one can, the two are swapped, so
/// "2003-31-12" reads as 2003-12-31.
inline Date parse_loose_date(std::string_view s) {
  const auto first = s.find('-');
  const auto second = first == std::string_view::npos ? first : s.find('-', first + 1);
  if (second == std::string_view::npos || s.find('-', second + 1) != std::string_view::npos) {
    throw DateError("not a Y-M-D date: '" + std::string(s) + "'");
  }
  int y = 0, a = 0, b = 0;
  if (!detail::all_digits(s.substr(0, first)) ||
      !detail::all_digits(s.substr(first + 1, second - first - 1)) ||
      !detail::all_digits(s.substr(second + 1)) || !detail::parse_uint(s.substr(0, first), y) ||
      !detail::parse_uint(s.substr(first + 1, second - first - 1), a) ||
      !detail::parse_uint(s.substr(second + 1), b)) {
    throw DateError("not a Y-M-D date: '" + std::string(s) + "'");
  }
  if (a > 12 && b <= 12) std::swap(a, b);
  if (auto d = detail::make_date(y, a, b)) return *d;
  throw DateError("invalid calendar date '" + std::string(s) + "'");
}

inline Date date_of(Timestamp ts) {
  return Date{std::chrono::floor<std::chrono::days>(ts)};
}

inline Timestamp start_of(Date d) { return Timestamp{d.days()}; }

inline Date today_utc() {
  return date_of(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

/// YYYY-MM-DDTHH:MM:SSZ
inline std::string format_timestamp(Timestamp ts) {
  const Date day = date_of(ts);
  const auto secs = (ts - start_of(day)).count();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02lld:%02lld:%02lldZ", day.iso().c_str(),
                static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                static_cast<long long>(secs % 60));
  return buf;
}

/// ISO-8601 date or date-time: "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS[.frac]]"
/// followed by an optional "Z", "+HH:MM", "+HHMM" or "+HH". A space may
/// replace the 'T'. A missing zone means UTC. Fractions are truncated.
inline std::optional<Timestamp> parse_iso_timestamp(std::string_view s) {
  const auto day = parse_iso_date(s.substr(0, 10));
  if (!day) return std::nullopt;
  Timestamp ts = start_of(*day);
  if (s.size() == 10) return ts;
  if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
  std::string_view rest = s.substr(11);
  auto two = [&](int& out, int max) {
    if (rest.size() < 2 || !detail::all_digits(rest.substr(0, 2))) return false;
    detail::parse_uint(rest.substr(0, 2), out);
    rest.remove_prefix(2);
    return out <= max;
  };
  int hh = 0, mm = 0, ss = 0;
  if (!two(hh, 23) || rest.empty() || rest.front() != ':') return std::nullopt;
  rest.remove_prefix(1);
  if (!two(mm, 59)) return std::nullopt;
  if (!rest.empty() && rest.front() == ':') {
    rest.remove_prefix(1);
    if (!two(ss, 60)) return std::nullopt;
    if (!rest.empty() && (rest.front() == '.' || rest.front() == ',')) {
      rest.remove_prefix(1);
      std::size_t n = 0;
      while (n < rest.size() && std::isdigit(static_cast<unsigned char>(rest[n]))) ++n;
      if (n == 0) return std::nullopt;
      rest.remove_prefix(n);
    }
  }
  ts += std::chrono::hours{hh} + std::chrono::minutes{mm} + std::chrono::seconds{ss};
  if (rest.empty() || rest == "Z" || rest == "z") return ts;
  if (rest.front() != '+' && rest.front() != '-') return std::nullopt;
  const int sign = rest.front() == '+' ? 1 : -1;
  rest.remove_prefix(1);
  int oh = 0, om = 0;
  if (!two(oh, 23)) return std::nullopt;
  if (!rest.empty() && rest.front() == ':') rest.remove_prefix(1);
  if (!rest.empty() && !two(om, 59)) return std::nullopt;
  if (!rest.empty()) return std::nullopt;
  return ts - sign * (std::chrono::hours{oh} + std::chrono::minutes{om});
}

/// RFC 5322 date-time including the obsolete forms: optional day name,
/// two- and three-digit years, alphabetic zones, missing seconds and
/// parenthesized comments. Returns the instant in UTC.
inline std::optional<Timestamp> parse_rfc5322_date(std::string_view s) {
  std::string cleaned;
  int depth = 0;
  for (char c : s) {
    if (c == '(') {
      ++depth;
    } else if (c == ')' && depth > 0) {
      --depth;
    } else if (depth == 0) {
      cleaned.push_back(c == ',' ? ' ' : c);
    }
  }
  std::vector<std::string_view> tok;
  {
    std::string_view v = cleaned;
    std::size_t i = 0;
    while (i < v.size()) {
      while (i < v.size() && std::isspace(static_cast<unsigned char>(v[i]))) ++i;
      std::size_t j = i;
      while (j < v.size() && !std::isspace(static_cast<unsigned char>(v[j]))) ++j;
      if (j > i) tok.push_back(v.substr(i, j - i));
      i = j;
    }
  }
  static constexpr std::string_view kDays[] = {"mon", "tue", "wed", "thu", "fri", "sat", "sun"};
  static constexpr std::string_view kMonths[] = {"jan", "feb", "mar", "apr", "may", "jun",
                                                 "jul", "aug", "sep", "oct", "nov", "dec"};
  std::size_t k = 0;
  if (k < tok.size() && !tok[k].empty() && std::isalpha(static_cast<unsigned char>(tok[k][0]))) {
    const std::string name = detail::ascii_lower(tok[k].substr(0, 3));
    bool is_day = false;
    for (auto d : kDays) is_day = is_day || name == d;
    if (!is_day) return std::nullopt;
    ++k;
  }
  if (tok.size() < k + 4) return std::nullopt;
  int day = 0, year = 0, month = 0;
  if (!detail::all_digits(tok[k]) || tok[k].size() > 2 || !detail::parse_uint(tok[k], day)) {
    return std::nullopt;
  }
  {
    const std::string name = detail::ascii_lower(tok[k + 1]);
    for (int i = 0; i < 12; ++i) {
      if (name.size() >= 3 && name.substr(0, 3) == kMonths[i]) month = i + 1;
    }
    if (month == 0) return std::nullopt;
  }
  const std::string_view ytok = tok[k + 2];
  if (!detail::all_digits(ytok) || !detail::parse_uint(ytok, year)) return std::nullopt;
  if (ytok.size() == 2) {
    year += year < 50 ? 2000 : 1900;
  } else if (ytok.size() == 3) {
    year += 1900;
  } else if (ytok.size() != 4) {
    return std::nullopt;
  }
  const auto date = detail::make_date(year, month, day);
  if (!date) return std::nullopt;

  int hh = 0, mm = 0, ss = 0;
  {
    std::string_view t = tok[k + 3];
    std::vector<std::string_view> parts;
    std::size_t i = 0;
    while (true) {
      const auto c = t.find(':', i);
      parts.push_back(t.substr(i, c == std::string_view::npos ? c : c - i));
      if (c == std::string_view::npos) break;
      i = c + 1;
    }
    if (parts.size() < 2 || parts.size() > 3) return std::nullopt;
    for (auto p : parts) {
      if (!detail::all_digits(p) || p.size() > 2) return std::nullopt;
    }
    detail::parse_uint(parts[0], hh);
    detail::parse_uint(parts[1], mm);
    if (parts.size() == 3) detail::parse_uint(parts[2], ss);
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  }
  int offset_minutes = 0;
  if (tok.size() > k + 4) {
    const std::string_view z = tok[k + 4];
    if ((z[0] == '+' || z[0] == '-') && z.size() == 5 && detail::all_digits(z.substr(1))) {
      int oh = 0, om = 0;
      detail::parse_uint(z.substr(1, 2), oh);
      detail::parse_uint(z.substr(3, 2), om);
      if (om > 59) return std::nullopt;
      offset_minutes = (z[0] == '+' ? 1 : -1) * (oh * 60 + om);
    } else {
      const std::string name = detail::ascii_lower(z);
      struct Named {
        std::string_view name;
        int hours;
      };
      static constexpr Named kZones[] = {{"ut", 0},   {"gmt", 0},  {"utc", 0},  {"z", 0},
                                         {"est", -5}, {"edt", -4}, {"cst", -6}, {"cdt", -5},
                                         {"mst", -7}, {"mdt", -6}, {"pst", -8}, {"pdt", -7}};
      bool known = false;
      for (const auto& zone : kZones) {
        if (name == zone.name) {
          offset_minutes = zone.hours * 60;
          known = true;
        }
      }
      // Other alphabetic zones are treated as -0000 (unknown local time).
      if (!known) {
        for (char c : name) {
          if (!std::isalpha(static_cast<unsigned char>(c))) return std::nullopt;
        }
      }
    }
  }
  Timestamp ts = start_of(*date) + std::chrono::hours{hh} + std::chrono::minutes{mm} +
                 std::chrono::seconds{ss};
  return ts - std::chrono::minutes{offset_minutes};
}

}  // namespace mailweave
