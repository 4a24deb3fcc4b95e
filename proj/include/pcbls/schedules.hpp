#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pcbls {

enum class ScheduleKind { exponential, linear, anti, random, constant };

std::string_view to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(std::string_view name);

/// Epoch-indexed smoothing factor.
///
/// exponential: max(floor, init * rate^e), 0 < rate < 1
/// linear:      max(floor, init - rate * e), rate > 0
/// anti:        min(cap, init * rate^e), rate > 1
/// random:      uniform draw in [range_lo, range_hi) keyed by (seed, e)
/// constant:    init
///
/// Epoch 0 uses the initial value; decay applies at each epoch boundary.
struct SmoothingSchedule {
  ScheduleKind kind = ScheduleKind::constant;
  double init = 0.0;
  double rate = 1.0;
  double floor = 0.0;
  double cap = 0.5;
  double range_lo = 0.0;
  double range_hi = 0.5;
  std::uint64_t seed = 0;

  static SmoothingSchedule exponential(double init, double rate, double floor = 0.0);
  static SmoothingSchedule linear(double init, double rate, double floor = 0.0);
  static SmoothingSchedule anti(double init, double rate, double cap = 0.5);
  static SmoothingSchedule random(double lo, double hi, std::uint64_t seed);
  static SmoothingSchedule constant(double value);

  /// Throws std::invalid_argument if the rate does not fit the kind.
  void validate() const;

  friend bool operator==(const SmoothingSchedule&, const SmoothingSchedule&) = default;
};

double value_at(const SmoothingSchedule& schedule, long long epoch);

} // namespace pcbls
