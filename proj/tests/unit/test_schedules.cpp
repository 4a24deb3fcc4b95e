#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "pcbls/schedules.hpp"

using namespace pcbls;

TEST_SUITE("schedules") {
  TEST_CASE("exponential") {
    const auto s = SmoothingSchedule::exponential(0.5, 0.9);
    CHECK(value_at(s, 0) == 0.5);
    CHECK(std::abs(value_at(s, 10) - 0.174339) < 1e-6);
    CHECK(std::abs(value_at(s, 10) - 0.5 * std::pow(0.9, 10)) < 1e-12);
    CHECK(value_at(s, 400) > 0.0);
    CHECK(value_at(SmoothingSchedule::exponential(0.5, 0.9, 0.1), 100) == 0.1);
  }

  TEST_CASE("linear") {
    const auto s = SmoothingSchedule::linear(0.5, 0.015);
    CHECK(value_at(s, 0) == 0.5);
    CHECK(value_at(s, 40) == 0.0);
    CHECK(std::abs(value_at(s, 10) - 0.35) < 1e-12);
  }

  TEST_CASE("anti") {
    const auto s = SmoothingSchedule::anti(0.005, 1.1, 0.5);
    CHECK(value_at(s, 0) == 0.005);
    CHECK(value_at(s, 1000) == 0.5);
    for (long long e = 0; e < 100; ++e) CHECK(value_at(s, e + 1) >= value_at(s, e));
  }

  TEST_CASE("constant") {
    const auto s = SmoothingSchedule::constant(0.1);
    for (long long e = 0; e < 60; ++e) CHECK(value_at(s, e) == 0.1);
  }

  TEST_CASE("random draws are bounded and replayable") {
    const auto s = SmoothingSchedule::random(0.0, 0.5, 77);
    bool varied = false;
    for (long long e = 0; e < 50; ++e) {
      const double v = value_at(s, e);
      CHECK(v >= 0.0);
      CHECK(v < 0.5);
      CHECK(value_at(s, e) == v);
      if (e > 0 && v != value_at(s, e - 1)) varied = true;
    }
    CHECK(varied);
    CHECK(value_at(SmoothingSchedule::random(0.0, 0.5, 78), 3) != value_at(s, 3));
  }

  TEST_CASE("monotone decay") {
    const auto exp = SmoothingSchedule::exponential(0.6, 0.9);
    const auto lin = SmoothingSchedule::linear(0.5, 0.015);
    for (long long e = 0; e < 80; ++e) {
      CHECK(value_at(exp, e + 1) <= value_at(exp, e));
      CHECK(value_at(lin, e + 1) <= value_at(lin, e));
    }
  }

  TEST_CASE("rate validation") {
    CHECK_THROWS_AS(value_at(SmoothingSchedule::exponential(0.5, 1.2), 1), std::invalid_argument);
    CHECK_THROWS_AS(value_at(SmoothingSchedule::anti(0.5, 0.9), 1), std::invalid_argument);
    CHECK_THROWS_AS(value_at(SmoothingSchedule::linear(0.5, 0.0), 1), std::invalid_argument);
    CHECK_THROWS_AS(value_at(SmoothingSchedule::constant(0.1), -1), std::invalid_argument);
  }

  TEST_CASE("names round-trip") {
    for (auto kind : {ScheduleKind::exponential, ScheduleKind::linear, ScheduleKind::anti, ScheduleKind::random,
                      ScheduleKind::constant}) {
      CHECK(schedule_kind_from_string(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(schedule_kind_from_string("cosine"), std::invalid_argument);
  }
}
