#pragma once

// Five-field cron expressions (minute hour day-of-month month day-of-week),
// evaluated in UTC. Fields accept *, lists, ranges and /steps. Day-of-week
// 0 and 7 are Sunday. When both day fields are restricted a day matches if
// either does, as in Vixie cron.

#include <bitset>
#include <string>
#include <string_view>

#include "colonies/core/clock.hpp"

namespace colonies::triggers {

class CronSchedule {
 public:
  // Throws Error(kInvalidSchedule).
  static CronSchedule parse(std::string_view expr);

  // First matching minute strictly after `t`.
  Nanos next_after(Nanos t) const;
  bool matches_minute(Nanos t) const;

 private:
  bool day_matches(int dom, int month, int dow) const;

  std::bitset<60> minutes_;
  std::bitset<24> hours_;
  std::bitset<32> days_;
  std::bitset<13> months_;
  std::bitset<7> weekdays_;
  bool dom_star_ = false;
  bool dow_star_ = false;
};

}  // namespace colonies::triggers
