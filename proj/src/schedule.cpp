#include "vrmd/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vrmd {

Schedule Schedule::constant() { return {}; }

Schedule Schedule::warmup_step_decay(double base, std::int64_t warmup_iters,
                                     std::vector<std::int64_t> decay_iters, double factor) {
  if (!(base > 0.0)) throw std::invalid_argument("schedule: base must be positive");
  if (warmup_iters < 0) throw std::invalid_argument("schedule: warmup_iters must be >= 0");
  if (!(factor > 0.0 && factor <= 1.0)) {
    throw std::invalid_argument("schedule: decay factor must be in (0, 1]");
  }
  Schedule s;
  s.kind = ScheduleKind::kWarmupStepDecay;
  s.base = base;
  s.warmup_iters = warmup_iters;
  s.decay_iters = std::move(decay_iters);
  std::sort(s.decay_iters.begin(), s.decay_iters.end());
  s.decay_factor = factor;
  return s;
}

Schedule Schedule::cosine_warm_restart(double base, std::int64_t period) {
  if (!(base > 0.0)) throw std::invalid_argument("schedule: base must be positive");
  if (period < 1) throw std::invalid_argument("schedule: period must be >= 1");
  Schedule s;
  s.kind = ScheduleKind::kCosineWarmRestart;
  s.base = base;
  s.period = period;
  return s;
}

double schedule_shape(const Schedule& s, std::int64_t step) {
  if (step < 1) throw std::invalid_argument("schedule: step is 1-based");
  switch (s.kind) {
    case ScheduleKind::kConstant:
      return 1.0;
    case ScheduleKind::kWarmupStepDecay: {
      if (step <= s.warmup_iters) {
        return static_cast<double>(step) / static_cast<double>(s.warmup_iters);
      }
      double shape = 1.0;
      for (std::int64_t di : s.decay_iters) {
        if (step >= di) shape *= s.decay_factor;
      }
      return shape;
    }
    case ScheduleKind::kCosineWarmRestart: {
      const std::int64_t phase = (step - 1) % s.period;
      return 0.5 * (1.0 + std::cos(std::numbers::pi_v<double> * static_cast<double>(phase) /
                                   static_cast<double>(s.period)));
    }
  }
  return 1.0;
}

double schedule_effective_step(const Schedule& s, std::int64_t step) {
  if (s.kind == ScheduleKind::kConstant) {
    throw std::invalid_argument("schedule: constant kind has no base-scaled step");
  }
  return s.base * schedule_shape(s, step);
}

double schedule_effective_scale(const Schedule& s, std::int64_t step, double alpha,
                                double m_floor) {
  if (s.kind == ScheduleKind::kConstant) return m_floor;
  return alpha / schedule_effective_step(s, step);
}

}  // namespace vrmd
