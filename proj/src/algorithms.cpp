#include "vrmd/algorithms.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "vrmd/proxstep.hpp"

namespace vrmd {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void validate_common(const FiniteSumProblem& p, const HyperParams& hp) {
  if (p.n < 1 || p.d < 1) throw std::invalid_argument("run: empty problem");
  if (hp.T < 1) throw std::invalid_argument("run: T must be >= 1");
  if (hp.K < 1) throw std::invalid_argument("run: K must be >= 1");
  if (!(hp.alpha > 0.0)) throw std::invalid_argument("run: alpha must be positive");
  if (hp.b < 1 || hp.b > p.n) throw std::invalid_argument("run: need 1 <= b <= n");
}

DenseVector initial_point(const FiniteSumProblem& p, const RunOptions& options) {
  if (options.x1) {
    if (static_cast<int>(options.x1->size()) != p.d) {
      throw std::invalid_argument("run: x1 dimension does not match the problem");
    }
    require_finite(*options.x1, "run x1");
    return *options.x1;
  }
  return DenseVector(static_cast<std::size_t>(p.d), 0.0);
}

std::int64_t draw_t_star(const HyperParams& hp, std::uint64_t seed) {
  if (hp.output_rule == OutputRule::kLastIterate) return hp.T + 1;
  RngStream stream(seed, make_stream_id(StreamRole::kOutputSelect));
  return 1 + static_cast<std::int64_t>(stream.next_below(static_cast<std::uint64_t>(hp.T)));
}

void record_checkpoint(std::vector<TraceRecord>& trace, const FiniteSumProblem& p,
                       const ProximalFamily& family, const HyperParams& hp,
                       const Schedule& schedule, const SfoLedger& ledger, std::int64_t t,
                       std::int64_t step, const DenseVector& x, Clock::time_point start) {
  TraceRecord rec;
  rec.t = t;
  rec.sfo_paper = ledger.paper_count();
  rec.sfo_honest = ledger.honest_count();
  rec.F = eval_F(p, x);
  rec.gx_sq = stationarity_sq(p, family, t, 1, alpha_for_step(hp, schedule, family, step), x);
  if (p.consts.F_star) rec.gap_opt = rec.F - *p.consts.F_star;
  rec.wall_ms = elapsed_ms(start);
  trace.push_back(rec);
}

// v = gy - ga + g_t per coordinate. Whenever the anchor correction cancels
// (ga_i == gt_i, in particular full-batch rounds where both are the same
// evaluation), the true value is exactly gy_i, so return it exactly; the
// left-to-right grouping likewise returns g_t exactly on the first inner step
// where gy == ga.
void vr_drift(const DenseVector& gy, const DenseVector& ga, const DenseVector& gt,
              DenseVector& v) {
  v.resize(gy.size());
  for (std::size_t i = 0; i < gy.size(); ++i) {
    v[i] = (gt[i] == ga[i]) ? gy[i] : (gy[i] - ga[i]) + gt[i];
  }
}

std::int64_t checked_T_cast(double t_real) {
  if (!(t_real >= 1.0)) return 1;
  if (t_real > 9.0e15) {
    throw std::invalid_argument("derived T exceeds the practical range; supply an override");
  }
  return static_cast<std::int64_t>(t_real);
}

std::int64_t batch_from_formula(std::int64_t n, double raw) {
  double v = std::ceil(raw);
  if (!(v >= 1.0)) v = 1.0;
  if (v > static_cast<double>(n)) return n;
  return static_cast<std::int64_t>(v);
}

void check_derive_inputs(std::int64_t n, double m, double L, double sigma2, double eps) {
  if (n < 1) throw std::invalid_argument("derive: n must be >= 1");
  if (!(m > 0.0) || !(L > 0.0)) throw std::invalid_argument("derive: m and L must be positive");
  if (sigma2 < 0.0) throw std::invalid_argument("derive: sigma2 must be nonnegative");
  if (!(eps > 0.0)) throw std::invalid_argument("derive: eps must be positive");
}

}  // namespace

double alpha_for_step(const HyperParams& hp, const Schedule& schedule,
                      const ProximalFamily& family, std::int64_t step) {
  if (family.kind == FamilyKind::kScaledEuclidean || schedule.kind == ScheduleKind::kConstant) {
    return hp.alpha;
  }
  const double floor = strong_convexity_floor(family);
  return hp.alpha / schedule_effective_scale(schedule, step, hp.alpha, floor);
}

ProximalFamily make_scaled_family(const Schedule& schedule, double alpha, double m_floor,
                                  std::int64_t total_steps, std::int64_t inner_len) {
  if (total_steps < 1) throw std::invalid_argument("make_scaled_family: total_steps >= 1");
  std::vector<double> scales(static_cast<std::size_t>(total_steps));
  for (std::int64_t s = 1; s <= total_steps; ++s) {
    scales[static_cast<std::size_t>(s - 1)] = schedule_effective_scale(schedule, s, alpha, m_floor);
  }
  return ProximalFamily::scaled(std::move(scales), inner_len);
}

RunResult run_adaptive_smd(const FiniteSumProblem& p, ProximalFamily family,
                           const HyperParams& hp, const Schedule& schedule, std::uint64_t seed,
                           const RunOptions& options) {
  validate_common(p, hp);
  if (strong_convexity_floor(family) <= 0.0) {
    throw std::invalid_argument("run: family floor must be positive");
  }
  family.inner_len = 1;
  const auto start = Clock::now();

  RunResult res;
  res.seed = seed;
  res.hp = hp;
  res.t_star = draw_t_star(hp, seed);

  DenseVector x = initial_point(p, options);
  DenseVector g;
  DenseVector x_next;

  for (std::int64_t t = 1; t <= hp.T; ++t) {
    if (options.collect_trace && (t - 1) % options.checkpoint_cadence == 0) {
      record_checkpoint(res.trace, p, family, hp, schedule, res.ledger, t, t, x, start);
    }
    if (t == res.t_star) res.output = x;

    RngStream batch_rng(seed, make_stream_id(StreamRole::kOuterBatch, static_cast<std::uint64_t>(t)));
    const IndexBatch batch = sample_without_replacement(batch_rng, p.n, hp.b);
    eval_batch_gradient(p, batch, x, g, &res.ledger);
    res.ledger.charge_paper(hp.b);

    if (family.is_diagonal()) family.diag.update(g);
    const double alpha_t = alpha_for_step(hp, schedule, family, t);
    prox_step_into(alpha_t, g, x, family, t, 1, p.reg, x_next);
    x.swap(x_next);

    if (options.hooks && options.hooks->on_outer) options.hooks->on_outer(t, g, x);
    res.ledger.mark_round(t);
  }

  res.last_iterate = x;
  if (hp.output_rule == OutputRule::kLastIterate) res.output = x;
  if (options.collect_trace) {
    record_checkpoint(res.trace, p, family, hp, schedule, res.ledger, hp.T + 1, hp.T, x, start);
  }
  return res;
}

RunResult run_svramd(const FiniteSumProblem& p, ProximalFamily family, const HyperParams& hp,
                     const Schedule& schedule, std::uint64_t seed, const RunOptions& options) {
  validate_common(p, hp);
  if (hp.B < hp.b || hp.B > p.n) throw std::invalid_argument("run: need b <= B <= n");
  if (strong_convexity_floor(family) <= 0.0) {
    throw std::invalid_argument("run: family floor must be positive");
  }
  family.inner_len = hp.K;
  const auto start = Clock::now();

  RunResult res;
  res.seed = seed;
  res.hp = hp;
  res.t_star = draw_t_star(hp, seed);

  DenseVector x = initial_point(p, options);
  DenseVector g_t, gy, ga, v, y_next;

  for (std::int64_t t = 1; t <= hp.T; ++t) {
    const std::int64_t step0 = (t - 1) * hp.K + 1;
    if (options.collect_trace && (t - 1) % options.checkpoint_cadence == 0) {
      record_checkpoint(res.trace, p, family, hp, schedule, res.ledger, t, step0, x, start);
    }
    if (t == res.t_star) res.output = x;

    RngStream outer_rng(seed, make_stream_id(StreamRole::kOuterBatch, static_cast<std::uint64_t>(t)));
    const IndexBatch outer = sample_without_replacement(outer_rng, p.n, hp.B);
    eval_batch_gradient(p, outer, x, g_t, &res.ledger);
    res.ledger.charge_paper(hp.B);
    if (options.hooks && options.hooks->on_outer) options.hooks->on_outer(t, g_t, x);

    const DenseVector anchor = x;  // y_1^t
    DenseVector y = x;
    for (std::int64_t k = 1; k <= hp.K; ++k) {
      RngStream inner_rng(seed, make_stream_id(StreamRole::kInnerBatch,
                                               static_cast<std::uint64_t>(t),
                                               static_cast<std::uint64_t>(k)));
      const IndexBatch inner = sample_without_replacement(inner_rng, p.n, hp.b);
      eval_batch_gradient(p, inner, y, gy, &res.ledger);
      eval_batch_gradient(p, inner, anchor, ga, &res.ledger);
      res.ledger.charge_paper(hp.b);
      vr_drift(gy, ga, g_t, v);

      if (family.is_diagonal()) family.diag.update(v);
      const double alpha_tk = alpha_for_step(hp, schedule, family, (t - 1) * hp.K + k);
      prox_step_into(alpha_tk, v, y, family, t, k, p.reg, y_next);
      y.swap(y_next);

      if (options.hooks && options.hooks->on_inner) options.hooks->on_inner(t, k, v, g_t, y);
    }
    x = y;
    res.ledger.mark_round(t);
  }

  res.last_iterate = x;
  if (hp.output_rule == OutputRule::kLastIterate) res.output = x;
  if (options.collect_trace) {
    record_checkpoint(res.trace, p, family, hp, schedule, res.ledger, hp.T + 1, hp.T * hp.K, x,
                      start);
  }
  return res;
}

RunResult run_vr_adagrad(const FiniteSumProblem& p, const HyperParams& hp,
                         const Schedule& schedule, std::uint64_t seed, double m,
                         const RunOptions& options) {
  return run_svramd(p, ProximalFamily::adagrad(p.d, m), hp, schedule, seed, options);
}

RunResult run_vr_rmsprop(const FiniteSumProblem& p, const HyperParams& hp,
                         const Schedule& schedule, std::uint64_t seed, double m, double beta,
                         const RunOptions& options) {
  return run_svramd(p, ProximalFamily::rmsprop(p.d, m, beta), hp, schedule, seed, options);
}

HyperParams derive_hp_smd_nonconvex(std::int64_t n, double m, double L, double sigma2, double eps,
                                    double delta_F) {
  check_derive_inputs(n, m, L, sigma2, eps);
  HyperParams hp;
  hp.alpha = m / L;
  hp.b = batch_from_formula(n, 12.0 * sigma2 / (m * m * eps));
  hp.B = hp.b;
  hp.K = 1;
  hp.T = checked_T_cast(std::ceil(8.0 * delta_F * L / (m * m * eps)));
  hp.output_rule = OutputRule::kUniformSample;
  return hp;
}

HyperParams derive_hp_smd_pl(std::int64_t n, double m, double L, double sigma2, double eps,
                             double mu, double delta_F, std::vector<std::string>* warnings) {
  check_derive_inputs(n, m, L, sigma2, eps);
  if (!(mu > 0.0)) throw std::invalid_argument("derive: mu must be positive");
  if (warnings && L / (m * m * mu) < std::sqrt(static_cast<double>(n))) {
    warnings->push_back("condition L/(m^2 mu) >= sqrt(n) fails; the fixed step m/L is outside "
                        "the analyzed regime");
  }
  HyperParams hp;
  hp.alpha = m / L;
  hp.b = batch_from_formula(n, 2.0 * (1.0 + m * m) * sigma2 / (eps * m * m * mu));
  hp.B = hp.b;
  hp.K = 1;
  const double gamma = pl_contraction_gamma_smd(m, L, mu);
  hp.T = checked_T_cast(std::ceil(std::log(2.0 * delta_F / eps) / std::log(1.0 / gamma)));
  hp.output_rule = OutputRule::kLastIterate;
  return hp;
}

HyperParams derive_hp_svramd_nonconvex(std::int64_t n, double m, double L, double sigma2,
                                       double eps, double delta_F, std::int64_t b) {
  check_derive_inputs(n, m, L, sigma2, eps);
  if (b < 1) throw std::invalid_argument("derive: b must be >= 1");
  HyperParams hp;
  hp.alpha = m / L;
  hp.b = std::min(b, n);
  hp.B = std::max(hp.b, batch_from_formula(n, 20.0 * sigma2 / (m * m * eps)));
  hp.K = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::floor(std::sqrt(static_cast<double>(hp.b) / 20.0))));
  hp.T = checked_T_cast(
      std::ceil(16.0 * delta_F * L / (m * m * eps * static_cast<double>(hp.K))));
  hp.output_rule = OutputRule::kUniformSample;
  return hp;
}

HyperParams derive_hp_svramd_pl(std::int64_t n, double m, double L, double sigma2, double eps,
                                double mu, double delta_F, std::int64_t b,
                                std::vector<std::string>* warnings) {
  check_derive_inputs(n, m, L, sigma2, eps);
  if (!(mu > 0.0)) throw std::invalid_argument("derive: mu must be positive");
  if (b < 1) throw std::invalid_argument("derive: b must be >= 1");
  if (warnings && L / (m * m * mu) < std::sqrt(static_cast<double>(n))) {
    warnings->push_back("condition L/(m^2 mu) >= sqrt(n) fails; the fixed step m/L is outside "
                        "the analyzed regime");
  }
  HyperParams hp;
  hp.alpha = m / L;
  hp.b = std::min(b, n);
  hp.B = std::max(hp.b, batch_from_formula(n, 10.0 * sigma2 / (eps * m * m * mu)));
  hp.K = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::floor(std::sqrt(static_cast<double>(hp.b) / 32.0))));
  const double gamma = pl_contraction_gamma_svramd(m, L, mu);
  hp.T = checked_T_cast(std::ceil(std::log(2.0 * delta_F / eps) /
                                  (static_cast<double>(hp.K) * std::log(1.0 / gamma))));
  hp.output_rule = OutputRule::kLastIterate;
  return hp;
}

double pl_contraction_gamma_smd(double m, double L, double mu) {
  return 1.0 - mu * m * m / (2.0 * L);
}

double pl_contraction_gamma_svramd(double m, double L, double mu) {
  return 1.0 - m * m * mu / (4.0 * L);
}

}  // namespace vrmd
