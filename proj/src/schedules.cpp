#include "pcbls/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pcbls/rng.hpp"

namespace pcbls {

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
  case ScheduleKind::exponential: return "exponential";
  case ScheduleKind::linear: return "linear";
  case ScheduleKind::anti: return "anti";
  case ScheduleKind::random: return "random";
  case ScheduleKind::constant: return "constant";
  }
  return "unknown";
}

ScheduleKind schedule_kind_from_string(std::string_view name) {
  for (auto kind : {ScheduleKind::exponential, ScheduleKind::linear, ScheduleKind::anti,
                    ScheduleKind::random, ScheduleKind::constant}) {
    if (to_string(kind) == name) {
      return kind;
    }
  }
  throw std::invalid_argument("unknown schedule kind '" + std::string(name) + "'");
}

SmoothingSchedule SmoothingSchedule::exponential(double init, double rate, double floor) {
  SmoothingSchedule s;
  s.kind = ScheduleKind::exponential;
  s.init = init;
  s.rate = rate;
  s.floor = floor;
  s.validate();
  return s;
}

SmoothingSchedule SmoothingSchedule::linear(double init, double rate, double floor) {
  SmoothingSchedule s;
  s.kind = ScheduleKind::linear;
  s.init = init;
  s.rate = rate;
  s.floor = floor;
  s.validate();
  return s;
}

SmoothingSchedule SmoothingSchedule::anti(double init, double rate, double cap) {
  SmoothingSchedule s;
  s.kind = ScheduleKind::anti;
  s.init = init;
  s.rate = rate;
  s.cap = cap;
  s.validate();
  return s;
}

SmoothingSchedule SmoothingSchedule::random(double lo, double hi, std::uint64_t seed) {
  SmoothingSchedule s;
  s.kind = ScheduleKind::random;
  s.range_lo = lo;
  s.range_hi = hi;
  s.seed = seed;
  s.validate();
  return s;
}

SmoothingSchedule SmoothingSchedule::constant(double value) {
  SmoothingSchedule s;
  s.kind = ScheduleKind::constant;
  s.init = value;
  s.validate();
  return s;
}

void SmoothingSchedule::validate() const {
  if (!(init >= 0.0) || !std::isfinite(init)) {
    throw std::invalid_argument("schedule init must be a non-negative real");
  }
  switch (kind) {
  case ScheduleKind::exponential:
    if (!(rate > 0.0 && rate < 1.0)) {
      throw std::invalid_argument("exponential schedule needs 0 < rate < 1, got " + std::to_string(rate));
    }
    break;
  case ScheduleKind::linear:
    if (!(rate > 0.0)) {
      throw std::invalid_argument("linear schedule needs rate > 0, got " + std::to_string(rate));
    }
    break;
  case ScheduleKind::anti:
    if (!(rate > 1.0)) {
      throw std::invalid_argument("anti schedule needs rate > 1, got " + std::to_string(rate));
    }
    break;
  case ScheduleKind::random:
    if (!(range_lo <= range_hi) || range_lo < 0.0) {
      throw std::invalid_argument("random schedule needs 0 <= range_lo <= range_hi");
    }
    break;
  case ScheduleKind::constant:
    break;
  }
}

double value_at(const SmoothingSchedule& s, long long epoch) {
  if (epoch < 0) {
    throw std::invalid_argument("schedule epoch must be non-negative");
  }
  s.validate();
  const auto e = static_cast<double>(epoch);
  switch (s.kind) {
  case ScheduleKind::exponential:
    return std::max(s.floor, s.init * std::pow(s.rate, e));
  case ScheduleKind::linear:
    return std::max(s.floor, s.init - s.rate * e);
  case ScheduleKind::anti:
    return std::min(s.cap, s.init * std::pow(s.rate, e));
  case ScheduleKind::random: {
    Rng rng(mix_seed(s.seed, static_cast<std::uint64_t>(epoch)));
    return rng.uniform(s.range_lo, s.range_hi);
  }
  case ScheduleKind::constant:
    return s.init;
  }
  return s.init;
}

} // namespace pcbls
