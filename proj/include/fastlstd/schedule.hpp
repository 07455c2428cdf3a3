#pragma once

#include <cmath>
#include <functional>

#include "fastlstd/errors.hpp"
#include "fastlstd/types.hpp"

namespace fastlstd {

enum class ScheduleKind { FixedPoint, IterateAveraging, LeastSquares, Custom };

/// A named step-size rule gamma_n, n >= 1.
///
///   FixedPoint:       gamma_n = (1 - beta) * c / (2 * (c + n))
///   IterateAveraging: gamma_n = ((1 - beta) / 2) * (c / (c + n))^alpha
///   LeastSquares:     gamma_n = c / (2 * (c + n))
///   Custom:           user-supplied generator of gamma_n
///
/// All named kinds are strictly positive and decreasing in n. FixedPoint is
/// the rule for the discounted fixed-point iteration; LeastSquares drops the
/// discount scale; IterateAveraging takes the larger polynomial steps that
/// pair with Polyak-Ruppert averaging.
template <typename Scalar>
struct StepSchedule {
  ScheduleKind kind = ScheduleKind::FixedPoint;
  Scalar beta = Scalar(0);   // discount; unused for LeastSquares
  Scalar c = Scalar(0);      // shift constant, > 0
  Scalar alpha = Scalar(0);  // exponent in (1/2, 1); IterateAveraging only
  std::function<Scalar(Index)> custom;

  static StepSchedule fixed_point(Scalar beta, Scalar c) {
    StepSchedule s;
    s.kind = ScheduleKind::FixedPoint;
    s.beta = beta;
    s.c = c;
    s.validate();
    return s;
  }

  static StepSchedule iterate_averaging(Scalar beta, Scalar c, Scalar alpha) {
    StepSchedule s;
    s.kind = ScheduleKind::IterateAveraging;
    s.beta = beta;
    s.c = c;
    s.alpha = alpha;
    s.validate();
    return s;
  }

  static StepSchedule least_squares(Scalar c) {
    StepSchedule s;
    s.kind = ScheduleKind::LeastSquares;
    s.c = c;
    s.validate();
    return s;
  }

  static StepSchedule custom_rule(std::function<Scalar(Index)> gamma) {
    StepSchedule s;
    s.kind = ScheduleKind::Custom;
    s.custom = std::move(gamma);
    s.validate();
    return s;
  }

  void validate() const {
    if (kind == ScheduleKind::Custom) {
      if (!custom) throw ConfigError("StepSchedule: custom kind needs a generator");
      return;
    }
    if (!(c > Scalar(0))) throw ConfigError("StepSchedule: c must be positive");
    if (kind != ScheduleKind::LeastSquares && !(beta > Scalar(0) && beta < Scalar(1)))
      throw ConfigError("StepSchedule: beta must lie in (0, 1)");
    if (kind == ScheduleKind::IterateAveraging &&
        !(alpha > Scalar(0.5) && alpha < Scalar(1)))
      throw ConfigError("StepSchedule: alpha must lie in (1/2, 1)");
  }
};

/// gamma_n for 1-based step n.
template <typename Scalar>
Scalar step_size(const StepSchedule<Scalar>& schedule, Index n) {
  if (n < 1) throw ConfigError("step_size: n must be >= 1");
  schedule.validate();
  const Scalar nn = static_cast<Scalar>(n);
  switch (schedule.kind) {
    case ScheduleKind::FixedPoint:
      return (Scalar(1) - schedule.beta) * schedule.c / (Scalar(2) * (schedule.c + nn));
    case ScheduleKind::IterateAveraging:
      return ((Scalar(1) - schedule.beta) / Scalar(2)) *
             std::pow(schedule.c / (schedule.c + nn), schedule.alpha);
    case ScheduleKind::LeastSquares:
      return schedule.c / (Scalar(2) * (schedule.c + nn));
    case ScheduleKind::Custom:
      return schedule.custom(n);
  }
  throw ConfigError("step_size: unknown schedule kind");
}

}  // namespace fastlstd
