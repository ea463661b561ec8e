#include "colonies/triggers/cron.hpp"

#include <chrono>
#include <charconv>
#include <vector>

#include "colonies/core/error.hpp"

namespace colonies::triggers {
namespace {

namespace chr = std::chrono;

[[noreturn]] void invalid(std::string_view expr, const std::string& why) {
  throw Error(Errc::kInvalidSchedule,
              "invalid cron expression \"" + std::string(expr) + "\": " + why);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

int number(std::string_view expr, std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    invalid(expr, "bad number '" + std::string(s) + "'");
  }
  return v;
}

// Sets bits lo..hi of a field; returns true for a bare "*".
template <std::size_t N>
bool parse_field(std::string_view expr, std::string_view field, int lo, int hi,
                 std::bitset<N>& bits) {
  bool star = field == "*";
  for (auto part : split(field, ',')) {
    int step = 1;
    auto slash = part.find('/');
    if (slash != std::string_view::npos) {
      step = number(expr, part.substr(slash + 1));
      if (step <= 0) invalid(expr, "step must be positive");
      part = part.substr(0, slash);
    }
    int from = lo;
    int to = hi;
    if (part != "*") {
      auto dash = part.find('-');
      if (dash == std::string_view::npos) {
        from = number(expr, part);
        to = slash == std::string_view::npos ? from : hi;
      } else {
        from = number(expr, part.substr(0, dash));
        to = number(expr, part.substr(dash + 1));
      }
    }
    if (from < lo || to > hi || from > to) {
      invalid(expr, "value out of range in '" + std::string(field) + "'");
    }
    for (int v = from; v <= to; v += step) bits.set(static_cast<std::size_t>(v));
  }
  return star;
}

}  // namespace

CronSchedule CronSchedule::parse(std::string_view expr) {
  std::vector<std::string_view> fields;
  for (auto f : split(expr, ' ')) {
    if (!f.empty()) fields.push_back(f);
  }
  if (fields.size() != 5) invalid(expr, "expected 5 fields");
  CronSchedule s;
  parse_field(expr, fields[0], 0, 59, s.minutes_);
  parse_field(expr, fields[1], 0, 23, s.hours_);
  s.dom_star_ = parse_field(expr, fields[2], 1, 31, s.days_);
  parse_field(expr, fields[3], 1, 12, s.months_);
  std::bitset<8> dow;
  s.dow_star_ = parse_field(expr, fields[4], 0, 7, dow);
  for (std::size_t d = 0; d < 7; ++d) s.weekdays_[d] = dow[d];
  if (dow[7]) s.weekdays_.set(0);
  return s;
}

bool CronSchedule::day_matches(int dom, int month, int dow) const {
  if (!months_[static_cast<std::size_t>(month)]) return false;
  bool d = days_[static_cast<std::size_t>(dom)];
  bool w = weekdays_[static_cast<std::size_t>(dow)];
  if (dom_star_ || dow_star_) return d && w;
  return d || w;
}

bool CronSchedule::matches_minute(Nanos t) const {
  chr::sys_time<chr::nanoseconds> tp{chr::nanoseconds(t)};
  auto day = chr::floor<chr::days>(tp);
  chr::year_month_day ymd{day};
  chr::weekday wd{day};
  auto since = chr::duration_cast<chr::minutes>(tp - day).count();
  return day_matches(static_cast<int>(static_cast<unsigned>(ymd.day())),
                     static_cast<int>(static_cast<unsigned>(ymd.month())),
                     static_cast<int>(wd.c_encoding())) &&
         hours_[static_cast<std::size_t>(since / 60)] &&
         minutes_[static_cast<std::size_t>(since % 60)];
}

Nanos CronSchedule::next_after(Nanos t) const {
  chr::sys_time<chr::nanoseconds> tp{chr::nanoseconds(t)};
  auto start = chr::floor<chr::minutes>(tp) + chr::minutes(1);
  auto day = chr::floor<chr::days>(start);
  auto first_minute = chr::duration_cast<chr::minutes>(start - day).count();
  // 28 years covers every weekday/leap-year combination.
  for (int i = 0; i < 366 * 28; ++i, day += chr::days(1), first_minute = 0) {
    chr::year_month_day ymd{day};
    chr::weekday wd{day};
    if (!day_matches(static_cast<int>(static_cast<unsigned>(ymd.day())),
                     static_cast<int>(static_cast<unsigned>(ymd.month())),
                     static_cast<int>(wd.c_encoding()))) {
      continue;
    }
    for (auto m = first_minute; m < 24 * 60; ++m) {
      if (hours_[static_cast<std::size_t>(m / 60)] &&
          minutes_[static_cast<std::size_t>(m % 60)]) {
        auto when = day + chr::minutes(m);
        return chr::duration_cast<chr::nanoseconds>(when.time_since_epoch()).count();
      }
    }
  }
  throw Error(Errc::kInvalidSchedule, "cron expression never fires");
}

}  // namespace colonies::triggers
