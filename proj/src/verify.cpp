#include "vrmd/verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <vector>

#include "vrmd/algorithms.hpp"
#include "vrmd/bregman.hpp"
#include "vrmd/metrics.hpp"
#include "vrmd/problems.hpp"
#include "vrmd/proxstep.hpp"
#include "vrmd/rng.hpp"

namespace vrmd {

namespace {

constexpr std::uint64_t kVerifySeed = 0x5EEDBA5Eu;

std::string fmt(const char* pattern, double a, double bvalue = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, bvalue);
  return std::string(buf);
}

DenseVector random_vec(RngStream& rng, int d, double scale) {
  DenseVector v(static_cast<std::size_t>(d));
  for (auto& x : v) x = scale * rng.next_gaussian();
  return v;
}

ProximalFamily random_family(RngStream& rng, int d) {
  const auto pick = rng.next_below(3);
  if (pick == 0) return ProximalFamily::euclidean();
  if (pick == 1) {
    std::vector<double> c(4);
    for (auto& ci : c) ci = 0.05 + 5.0 * rng.next_double();
    return ProximalFamily::scaled(std::move(c), 2);
  }
  ProximalFamily f = ProximalFamily::adagrad(d, 1e-3 + rng.next_double());
  const int warm = static_cast<int>(rng.next_below(4));
  for (int i = 0; i < warm; ++i) f.diag.update(random_vec(rng, d, 2.0));
  return f;
}

Regularizer random_reg(RngStream& rng) {
  return rng.next_below(2) == 0 ? Regularizer::zero() : Regularizer::l1(0.5 * rng.next_double());
}

// All size-k subsets of [0, n) in lexicographic order.
void for_each_subset(std::int64_t n, std::int64_t k,
                     const std::function<void(const std::vector<std::int64_t>&)>& fn) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(k));
  for (std::int64_t i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    fn(idx);
    std::int64_t i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (std::int64_t j = i + 1; j < k; ++j) {
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
}

// Small custom finite sum with per-component diagonal quadratics. L is the
// largest diagonal entry across components.
FiniteSumProblem tiny_quadratic_problem(RngStream& rng, std::int64_t n, int d) {
  struct Comp {
    std::vector<double> diag;
    std::vector<double> center;
  };
  auto comps = std::make_shared<std::vector<Comp>>();
  double lmax = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    Comp c;
    c.diag.resize(static_cast<std::size_t>(d));
    c.center.resize(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      c.diag[static_cast<std::size_t>(j)] = 0.2 + 1.8 * rng.next_double();
      c.center[static_cast<std::size_t>(j)] = rng.next_gaussian();
      lmax = std::max(lmax, c.diag[static_cast<std::size_t>(j)]);
    }
    comps->push_back(std::move(c));
  }
  FiniteSumProblem p;
  p.n = n;
  p.d = d;
  p.kind = ProblemKind::kCustom;
  p.consts.L = lmax;
  p.value_i = [comps](std::int64_t i, const DenseVector& x) {
    const auto& c = (*comps)[static_cast<std::size_t>(i)];
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double dev = x[j] - c.center[j];
      s += c.diag[j] * dev * dev;
    }
    return 0.5 * s;
  };
  p.grad_i = [comps](std::int64_t i, const DenseVector& x, DenseVector& out) {
    const auto& c = (*comps)[static_cast<std::size_t>(i)];
    out.resize(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = c.diag[j] * (x[j] - c.center[j]);
  };
  return p;
}

}  // namespace

CheckResult verify_prox_oracle(int instances) {
  RngStream rng(kVerifySeed, 1);
  double worst = 0.0;
  for (int it = 0; it < instances; ++it) {
    const int d = 1 + static_cast<int>(rng.next_below(10));
    const ProximalFamily fam = random_family(rng, d);
    const Regularizer reg = random_reg(rng);
    const double alpha = 0.01 + 3.0 * rng.next_double();
    const DenseVector anchor = random_vec(rng, d, 2.0);
    const DenseVector drift = random_vec(rng, d, 2.0);
    const std::int64_t t = 1 + static_cast<std::int64_t>(rng.next_below(3));
    const std::int64_t k = 1 + static_cast<std::int64_t>(rng.next_below(2));
    const DenseVector closed = prox_step(alpha, drift, anchor, fam, t, k, reg);
    const DenseVector ref = prox_step_reference(alpha, drift, anchor, fam, t, k, reg);
    worst = std::max(worst, max_abs_diff(closed, ref));
  }
  CheckResult r;
  r.name = "prox closed form vs golden-section oracle";
  r.pass = worst <= 1e-8;
  r.detail = fmt("max |closed - reference| = %.3e (tol 1e-8)", worst);
  return r;
}

CheckResult verify_subset_variance_bounds() {
  RngStream rng(kVerifySeed, 2);
  double worst_slack = -1.0;

  // Mean-over-subsets deviation bound, every n <= 6 and every b.
  for (std::int64_t n = 2; n <= 6; ++n) {
    const int d = 3;
    FiniteSumProblem p = tiny_quadratic_problem(rng, n, d);
    const DenseVector x = random_vec(rng, d, 1.5);
    DenseVector full;
    eval_full_gradient(p, x, full);
    double sum_sq = 0.0;
    DenseVector gi(static_cast<std::size_t>(d));
    for (std::int64_t i = 0; i < n; ++i) {
      p.grad_i(i, x, gi);
      sum_sq += norm2_sq(sub(gi, full));
    }
    for (std::int64_t b = 1; b <= n; ++b) {
      double mean_dev = 0.0;
      std::int64_t count = 0;
      for_each_subset(n, b, [&](const std::vector<std::int64_t>& idx) {
        IndexBatch batch;
        batch.indices = idx;
        DenseVector g;
        eval_batch_gradient(p, batch, x, g);
        mean_dev += norm2_sq(sub(g, full));
        ++count;
      });
      mean_dev /= static_cast<double>(count);
      const double bound =
          (b < n ? 1.0 : 0.0) / (static_cast<double>(b) * static_cast<double>(n)) * sum_sq;
      worst_slack = std::max(worst_slack, mean_dev - bound);
    }
  }

  // Variance-reduced drift deviation bound, enumerated over both batch draws.
  for (std::int64_t n = 3; n <= 6; ++n) {
    const int d = 2;
    FiniteSumProblem p = tiny_quadratic_problem(rng, n, d);
    const DenseVector x = random_vec(rng, d, 1.0);
    const DenseVector y = add(x, random_vec(rng, d, 0.7));
    DenseVector grad_y, grad_x;
    eval_full_gradient(p, y, grad_y);
    eval_full_gradient(p, x, grad_x);
    double sigma2 = 0.0;
    DenseVector gi(static_cast<std::size_t>(d));
    for (std::int64_t i = 0; i < n; ++i) {
      p.grad_i(i, x, gi);
      sigma2 += norm2_sq(sub(gi, grad_x));
    }
    sigma2 /= static_cast<double>(n);
    const double dist_sq = norm2_sq(sub(y, x));
    const double L = p.consts.L;
    for (std::int64_t B : {static_cast<std::int64_t>(2), n}) {
      for (std::int64_t b = 1; b <= 3; ++b) {
        double mean_dev = 0.0;
        std::int64_t count = 0;
        for_each_subset(n, B, [&](const std::vector<std::int64_t>& outer_idx) {
          IndexBatch outer;
          outer.indices = outer_idx;
          DenseVector g_t;
          eval_batch_gradient(p, outer, x, g_t);
          for_each_subset(n, b, [&](const std::vector<std::int64_t>& inner_idx) {
            IndexBatch inner;
            inner.indices = inner_idx;
            DenseVector gy, ga;
            eval_batch_gradient(p, inner, y, gy);
            eval_batch_gradient(p, inner, x, ga);
            DenseVector v(gy.size());
            for (std::size_t i = 0; i < gy.size(); ++i) v[i] = gy[i] - ga[i] + g_t[i];
            mean_dev += norm2_sq(sub(grad_y, v));
            ++count;
          });
        });
        mean_dev /= static_cast<double>(count);
        const double bound = L * L / static_cast<double>(b) * dist_sq +
                             (B < n ? sigma2 / static_cast<double>(B) : 0.0);
        worst_slack = std::max(worst_slack, mean_dev - bound);
      }
    }
  }

  CheckResult r;
  r.name = "enumerated batch-variance bounds";
  r.pass = worst_slack <= 1e-12;
  r.detail = fmt("worst bound violation = %.3e (tol 1e-12)", worst_slack);
  return r;
}

CheckResult verify_step_inequalities(int instances) {
  RngStream rng(kVerifySeed, 3);
  double worst = -1.0;

  // <v, g~> >= m ||g~||^2 + (h(y*) - h(anchor))/alpha
  for (int it = 0; it < instances; ++it) {
    const int d = 1 + static_cast<int>(rng.next_below(8));
    const ProximalFamily fam = random_family(rng, d);
    const Regularizer reg = random_reg(rng);
    const double m = strong_convexity_floor(fam);
    const double alpha = 0.02 + 2.0 * rng.next_double();
    const DenseVector anchor = random_vec(rng, d, 1.5);
    const DenseVector v = random_vec(rng, d, 1.5);
    const DenseVector y = prox_step(alpha, v, anchor, fam, 1, 1, reg);
    DenseVector gtil(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) gtil[i] = (anchor[i] - y[i]) / alpha;
    const double lhs = dot(v, gtil);
    const double rhs = m * norm2_sq(gtil) + (reg.value(y) - reg.value(anchor)) / alpha;
    worst = std::max(worst, rhs - lhs);
  }

  // ||y*(v) - y*(v')|| <= (alpha/m) ||v - v'||
  for (int it = 0; it < instances; ++it) {
    const int d = 1 + static_cast<int>(rng.next_below(8));
    const ProximalFamily fam = random_family(rng, d);
    const Regularizer reg = random_reg(rng);
    const double m = strong_convexity_floor(fam);
    const double alpha = 0.02 + 2.0 * rng.next_double();
    const DenseVector anchor = random_vec(rng, d, 1.5);
    const DenseVector v1 = random_vec(rng, d, 1.5);
    const DenseVector v2 = random_vec(rng, d, 1.5);
    const DenseVector y1 = prox_step(alpha, v1, anchor, fam, 1, 1, reg);
    const DenseVector y2 = prox_step(alpha, v2, anchor, fam, 1, 1, reg);
    const double lhs = norm2(sub(y1, y2));
    const double rhs = alpha / m * norm2(sub(v1, v2));
    worst = std::max(worst, lhs - rhs);
  }

  // ||g_X - g~_X|| <= (1/m) ||grad f - g||
  for (int it = 0; it < instances; ++it) {
    const int d = 2;
    FiniteSumProblem p = tiny_quadratic_problem(rng, 4, d);
    p.reg = random_reg(rng);
    const ProximalFamily fam = random_family(rng, d);
    const double m = strong_convexity_floor(fam);
    const double alpha = 0.05 + rng.next_double();
    const DenseVector x = random_vec(rng, d, 1.5);
    DenseVector grad;
    eval_full_gradient(p, x, grad);
    const DenseVector g = add(grad, random_vec(rng, d, 0.8));
    const DenseVector gx = generalized_gradient(p, fam, 1, 1, alpha, x);
    const DenseVector x_plus = prox_step(alpha, g, x, fam, 1, 1, p.reg);
    DenseVector gx_til(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) gx_til[i] = (x[i] - x_plus[i]) / alpha;
    const double lhs = norm2(sub(gx, gx_til));
    const double rhs = norm2(sub(grad, g)) / m;
    worst = std::max(worst, lhs - rhs);
  }

  CheckResult r;
  r.name = "mirror-step inequalities (inner product, contraction, difference)";
  r.pass = worst <= 1e-10;
  r.detail = fmt("worst violation = %.3e (tol 1e-10)", worst);
  return r;
}

CheckResult verify_strong_convexity_floor(int pairs) {
  RngStream rng(kVerifySeed, 4);
  const int d = 6;

  std::vector<ProximalFamily> families;
  families.push_back(ProximalFamily::euclidean());
  {
    std::vector<double> c(8);
    for (auto& ci : c) ci = 0.5 + 4.0 * rng.next_double();
    families.push_back(ProximalFamily::scaled(std::move(c), 2));
  }
  ProximalFamily ada = ProximalFamily::adagrad(d, 1e-3);
  ProximalFamily ema = ProximalFamily::rmsprop(d, 1e-3, 0.999);
  for (int i = 0; i < 100; ++i) {
    ada.diag.update(random_vec(rng, d, 1.5));
    ema.diag.update(random_vec(rng, d, 1.5));
  }
  families.push_back(ada);
  families.push_back(ema);

  double worst = -1.0;
  for (const auto& fam : families) {
    const double m = strong_convexity_floor(fam);
    for (int it = 0; it < pairs; ++it) {
      const DenseVector x = random_vec(rng, d, 2.0);
      const DenseVector y = random_vec(rng, d, 2.0);
      const std::int64_t t = 1 + static_cast<std::int64_t>(rng.next_below(4));
      const std::int64_t k = 1 + static_cast<std::int64_t>(rng.next_below(2));
      const double lhs = bregman_divergence(fam, t, k, x, y);
      const double rhs = 0.5 * m * norm2_sq(sub(x, y));
      worst = std::max(worst, rhs - lhs);
    }
  }

  CheckResult r;
  r.name = "strong-convexity floor of every family";
  r.pass = worst <= 1e-12;
  r.detail = fmt("worst floor violation = %.3e (tol 1e-12)", worst);
  return r;
}

CheckResult verify_estimator_exactness() {
  RngStream prng(kVerifySeed, 5);
  bool ok = true;
  std::string detail;

  // v_1 == g_t on every outer round of a stochastic run.
  {
    FiniteSumProblem p = tiny_quadratic_problem(prng, 24, 4);
    HyperParams hp;
    hp.alpha = 0.3;
    hp.B = 12;
    hp.b = 4;
    hp.K = 3;
    hp.T = 17;
    bool anchor_ok = true;
    RunHooks hooks;
    hooks.on_inner = [&](std::int64_t, std::int64_t k, const DenseVector& v,
                         const DenseVector& g_t, const DenseVector&) {
      if (k == 1 && !value_equal(v, g_t)) anchor_ok = false;
    };
    RunOptions opt;
    opt.hooks = &hooks;
    opt.collect_trace = false;
    const RunResult res = run_svramd(p, ProximalFamily::euclidean(), hp, Schedule::constant(),
                                     2024, opt);
    const std::int64_t paper = hp.T * hp.B + hp.T * hp.K * hp.b;
    const std::int64_t honest = hp.T * hp.B + 2 * hp.T * hp.K * hp.b;
    if (!anchor_ok) {
      ok = false;
      detail += "v_1 != g_t on some round; ";
    }
    if (res.ledger.paper_count() != paper || res.ledger.honest_count() != honest) {
      ok = false;
      detail += "ledger mismatch on stochastic run; ";
    }
  }

  // Full-batch run reproduces plain gradient descent bit for bit.
  {
    RngStream rng2(kVerifySeed, 6);
    FiniteSumProblem p = make_pl_quadratic(rng2, 16, 5, 0.2, 1.0);
    HyperParams hp;
    hp.alpha = 0.8;
    hp.B = p.n;
    hp.b = p.n;
    hp.K = 2;
    hp.T = 9;
    hp.output_rule = OutputRule::kLastIterate;
    RunOptions opt;
    opt.collect_trace = false;
    const RunResult res = run_svramd(p, ProximalFamily::euclidean(), hp, Schedule::constant(),
                                     77, opt);
    DenseVector x(static_cast<std::size_t>(p.d), 0.0);
    DenseVector g;
    for (std::int64_t s = 0; s < hp.T * hp.K; ++s) {
      eval_full_gradient(p, x, g);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = x[i] - hp.alpha * g[i];
    }
    if (!value_equal(res.last_iterate, x)) {
      ok = false;
      detail += "full-batch run differs from gradient descent; ";
    }
    const std::int64_t paper = hp.T * hp.B + hp.T * hp.K * hp.b;
    const std::int64_t honest = hp.T * hp.B + 2 * hp.T * hp.K * hp.b;
    if (res.ledger.paper_count() != paper || res.ledger.honest_count() != honest) {
      ok = false;
      detail += "ledger mismatch on full-batch run; ";
    }
  }

  // Single-loop ledger: T*b on both counters.
  {
    FiniteSumProblem p = tiny_quadratic_problem(prng, 20, 3);
    HyperParams hp;
    hp.alpha = 0.2;
    hp.b = 5;
    hp.B = 5;
    hp.T = 13;
    RunOptions opt;
    opt.collect_trace = false;
    const RunResult res = run_adaptive_smd(p, ProximalFamily::euclidean(), hp,
                                           Schedule::constant(), 3, opt);
    if (res.ledger.paper_count() != hp.T * hp.b || res.ledger.honest_count() != hp.T * hp.b) {
      ok = false;
      detail += "single-loop ledger mismatch; ";
    }
  }

  CheckResult r;
  r.name = "estimator exactness and gradient-count ledger";
  r.pass = ok;
  r.detail = ok ? "anchor cancellation, full-batch reduction and ledger counts all exact" : detail;
  return r;
}

std::vector<CheckResult> run_verification() {
  return {verify_prox_oracle(), verify_subset_variance_bounds(), verify_step_inequalities(),
          verify_strong_convexity_floor(), verify_estimator_exactness()};
}

}  // namespace vrmd
