#pragma once

#include <cstdint>
#include <vector>

namespace vrmd {

enum class ScheduleKind { kConstant, kWarmupStepDecay, kCosineWarmRestart };

// Shape of the effective step size over iterations. For the constant kind the
// effective step is alpha / m (the family floor); the shaped kinds emit
// base * shape(step) with shape in (0, 1]:
//   warmup-step-decay:   linear ramp over warmup_iters, then a decay_factor
//                        multiplication at each decay iteration
//   cosine-warm-restart: (1 + cos(pi * phase / period)) / 2, restarting each
//                        period
struct Schedule {
  ScheduleKind kind = ScheduleKind::kConstant;
  double base = 0.0;
  std::int64_t warmup_iters = 0;
  std::vector<std::int64_t> decay_iters;
  double decay_factor = 0.1;
  std::int64_t period = 1;

  static Schedule constant();
  static Schedule warmup_step_decay(double base, std::int64_t warmup_iters,
                                    std::vector<std::int64_t> decay_iters, double factor);
  static Schedule cosine_warm_restart(double base, std::int64_t period);
};

// shape(step) in (0, 1]; step is 1-based.
double schedule_shape(const Schedule& s, std::int64_t step);

// base * shape(step) for the shaped kinds.
double schedule_effective_step(const Schedule& s, std::int64_t step);

// The scale c_t >= m realizing the schedule through the scaled-euclidean
// family: a prox step with curvature c_t and step size alpha moves exactly
// like a euclidean step of size alpha / c_t.
double schedule_effective_scale(const Schedule& s, std::int64_t step, double alpha,
                                double m_floor);

}  // namespace vrmd
