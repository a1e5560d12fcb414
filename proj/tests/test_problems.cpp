#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "vrmd/metrics.hpp"
#include "vrmd/problems.hpp"
#include "vrmd/rng.hpp"

using namespace vrmd;

namespace {

// Central finite-difference oracle for the full gradient.
DenseVector fd_gradient(const FiniteSumProblem& p, const DenseVector& x, double h = 1e-6) {
  DenseVector g(x.size());
  DenseVector xp = x, xm = x;
  for (std::size_t j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    g[j] = (eval_f_mean(p, xp) - eval_f_mean(p, xm)) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return g;
}

void check_fd(const FiniteSumProblem& p, RngStream& rng, int points, double rel_tol) {
  for (int it = 0; it < points; ++it) {
    DenseVector x(static_cast<std::size_t>(p.d));
    for (auto& v : x) v = rng.next_gaussian();
    DenseVector g;
    eval_full_gradient(p, x, g);
    const DenseVector fd = fd_gradient(p, x);
    const double scale = std::max(1e-8, norm2(fd));
    CHECK(norm2(sub(g, fd)) / scale < rel_tol);
  }
}

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

}  // namespace

TEST_CASE("finite differences validate every problem kind") {
  RngStream gen(77, 0);
  RngStream probe(77, 1);
  FiniteSumProblem sig = make_sigmoid_regression(gen, 40, 4, 0.1);
  FiniteSumProblem pl = make_pl_quadratic(gen, 30, 5, 0.05, 1.0);
  FiniteSumProblem lls = make_linear_least_squares(gen, 25, 3, 0.05);
  check_fd(sig, probe, 20, 1e-5);
  check_fd(pl, probe, 20, 1e-5);
  check_fd(lls, probe, 20, 1e-5);
}

TEST_CASE("component finite differences on sigmoid regression") {
  RngStream gen(78, 0);
  RngStream probe(78, 1);
  FiniteSumProblem p = make_sigmoid_regression(gen, 10, 3, 0.2);
  for (int it = 0; it < 10; ++it) {
    const std::int64_t i = static_cast<std::int64_t>(probe.next_below(10));
    DenseVector x(3);
    for (auto& v : x) v = probe.next_gaussian();
    DenseVector g;
    p.grad_i(i, x, g);
    const double h = 1e-6;
    DenseVector fd(3);
    DenseVector xp = x, xm = x;
    for (std::size_t j = 0; j < 3; ++j) {
      xp[j] += h;
      xm[j] -= h;
      fd[j] = (p.value_i(i, xp) - p.value_i(i, xm)) / (2.0 * h);
      xp[j] = x[j];
      xm[j] = x[j];
    }
    const double scale = std::max(1e-8, norm2(fd));
    CHECK(norm2(sub(g, fd)) / scale < 1e-5);
  }
}

TEST_CASE("degenerate sigmoid data has an identically zero gradient") {
  // n=1, d=1 with a = 0 makes every f_i constant.
  struct Zero {};
  FiniteSumProblem p;
  p.n = 1;
  p.d = 1;
  p.kind = ProblemKind::kSigmoidRegression;
  p.consts.L = 0.0;
  p.value_i = [](std::int64_t, const DenseVector&) { return 0.25; };
  p.grad_i = [](std::int64_t, const DenseVector&, DenseVector& out) { out.assign(1, 0.0); };
  DenseVector g;
  eval_full_gradient(p, {3.7}, g);
  CHECK(g == DenseVector{0.0});
}

TEST_CASE("full gradient equals the mean of component gradients") {
  RngStream gen(79, 0);
  FiniteSumProblem p = make_sigmoid_regression(gen, 12, 3, 0.1);
  const DenseVector x{0.3, -0.2, 0.9};
  DenseVector full;
  eval_full_gradient(p, x, full);
  // plain ascending mean as the oracle
  DenseVector mean(3, 0.0), g(3);
  for (std::int64_t i = 0; i < p.n; ++i) {
    p.grad_i(i, x, g);
    add_inplace(mean, g);
  }
  for (auto& v : mean) v /= static_cast<double>(p.n);
  CHECK(norm2(sub(full, mean)) < 1e-14);
}

TEST_CASE("component smoothness spot-check against the declared L") {
  RngStream gen(80, 0);
  RngStream probe(80, 1);
  FiniteSumProblem p = make_sigmoid_regression(gen, 30, 4, 0.15);
  const double L = p.consts.L;
  DenseVector gx(4), gy(4);
  for (int it = 0; it < 200; ++it) {
    const auto i = static_cast<std::int64_t>(probe.next_below(30));
    DenseVector x(4), y(4);
    for (auto& v : x) v = 2.0 * probe.next_gaussian();
    for (auto& v : y) v = 2.0 * probe.next_gaussian();
    p.grad_i(i, x, gx);
    p.grad_i(i, y, gy);
    CHECK(norm2(sub(gx, gy)) <= (L + 1e-9) * norm2(sub(x, y)));
  }
}

TEST_CASE("pl quadratic: closed forms and gradient dominance") {
  RngStream gen(81, 0);

  SUBCASE("single 1-d quadratic centered at zero") {
    FiniteSumProblem p = make_pl_quadratic(gen, 1, 1, 1.0, 1.0);
    CHECK(*p.consts.F_star == doctest::Approx(eval_F(p, *p.minimizer)).epsilon(1e-12));
    DenseVector g;
    eval_full_gradient(p, *p.minimizer, g);
    CHECK(norm2(g) < 1e-12);
  }

  SUBCASE("gradient dominance holds at random points") {
    FiniteSumProblem p = make_pl_quadratic(gen, 20, 6, 0.05, 2.0);
    RngStream probe(81, 1);
    for (int it = 0; it < 1000; ++it) {
      DenseVector x(6);
      for (auto& v : x) v = 3.0 * probe.next_gaussian();
      DenseVector g;
      eval_full_gradient(p, x, g);
      const double lhs = norm2_sq(g);
      const double rhs = 2.0 * 0.05 * (eval_F(p, x) - *p.consts.F_star);
      CHECK(lhs >= rhs - 1e-10);
    }
  }

  SUBCASE("isotropic case mu = L gives exact equality") {
    FiniteSumProblem p = make_pl_quadratic(gen, 8, 4, 0.7, 0.7);
    RngStream probe(81, 2);
    for (int it = 0; it < 100; ++it) {
      DenseVector x(4);
      for (auto& v : x) v = probe.next_gaussian();
      DenseVector g;
      eval_full_gradient(p, x, g);
      const double lhs = norm2_sq(g);
      const double rhs = 2.0 * 0.7 * (eval_F(p, x) - *p.consts.F_star);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
  }

  SUBCASE("mu > L is rejected") {
    CHECK_THROWS_AS(make_pl_quadratic(gen, 4, 2, 2.0, 1.0), std::invalid_argument);
  }
}

TEST_CASE("estimate_sigma2") {
  SUBCASE("identical components have zero variance") {
    FiniteSumProblem p;
    p.n = 5;
    p.d = 2;
    p.value_i = [](std::int64_t, const DenseVector& x) { return norm2_sq(x); };
    p.grad_i = [](std::int64_t, const DenseVector& x, DenseVector& out) {
      out = scale(2.0, x);
    };
    CHECK(estimate_sigma2(p, {{0.4, -1.0}}) == 0.0);
  }

  SUBCASE("two opposite components give ||a||^2") {
    FiniteSumProblem p;
    p.n = 2;
    p.d = 2;
    // grad f_1 = +a, grad f_2 = -a with a = (1, 2)
    p.grad_i = [](std::int64_t i, const DenseVector&, DenseVector& out) {
      out = i == 0 ? DenseVector{1.0, 2.0} : DenseVector{-1.0, -2.0};
    };
    p.value_i = [](std::int64_t, const DenseVector&) { return 0.0; };
    CHECK(estimate_sigma2(p, {{0.0, 0.0}}) == doctest::Approx(5.0).epsilon(1e-14));
  }

  SUBCASE("invariant to component reordering") {
    RngStream gen(83, 0);
    FiniteSumProblem p = make_pl_quadratic(gen, 7, 3, 0.1, 1.0);
    FiniteSumProblem rev = p;
    const auto base_grad = p.grad_i;
    const auto base_val = p.value_i;
    const std::int64_t n = p.n;
    rev.grad_i = [base_grad, n](std::int64_t i, const DenseVector& x, DenseVector& out) {
      base_grad(n - 1 - i, x, out);
    };
    rev.value_i = [base_val, n](std::int64_t i, const DenseVector& x) {
      return base_val(n - 1 - i, x);
    };
    const std::vector<DenseVector> probes = {{0.1, 0.2, -0.4}, {1.0, -1.0, 0.5}};
    CHECK(estimate_sigma2(p, probes) == doctest::Approx(estimate_sigma2(rev, probes)).epsilon(1e-12));
  }

  SUBCASE("n < 2 is rejected") {
    FiniteSumProblem p;
    p.n = 1;
    p.d = 1;
    CHECK_THROWS_AS(estimate_sigma2(p, {{0.0}}), std::invalid_argument);
  }
}

TEST_CASE("batch gradients") {
  RngStream gen(84, 0);
  FiniteSumProblem p = make_sigmoid_regression(gen, 9, 3, 0.1);
  const DenseVector x{0.2, -0.7, 0.4};

  SUBCASE("full-set batch is bit-identical to the full gradient") {
    DenseVector full, batch;
    eval_full_gradient(p, x, full);
    eval_batch_gradient(p, full_batch(p.n), x, batch);
    CHECK(value_equal(full, batch));
  }

  SUBCASE("singleton batch is the component gradient") {
    IndexBatch b;
    b.indices = {4};
    DenseVector g, gi;
    eval_batch_gradient(p, b, x, g);
    p.grad_i(4, x, gi);
    CHECK(value_equal(g, gi));
  }

  SUBCASE("empty batch is rejected") {
    IndexBatch b;
    DenseVector g;
    CHECK_THROWS_AS(eval_batch_gradient(p, b, x, g), std::invalid_argument);
  }

  SUBCASE("mean over all 15 batches of size 2 from n=6 equals the full gradient") {
    RngStream gen6(84, 1);
    FiniteSumProblem p6 = make_sigmoid_regression(gen6, 6, 3, 0.1);
    DenseVector full;
    eval_full_gradient(p6, x, full);
    DenseVector mean(3, 0.0);
    int count = 0;
    for_each_subset(6, 2, [&](const std::vector<std::int64_t>& idx) {
      IndexBatch b;
      b.indices = idx;
      DenseVector g;
      eval_batch_gradient(p6, b, x, g);
      add_inplace(mean, g);
      ++count;
    });
    CHECK(count == 15);
    for (auto& v : mean) v /= count;
    CHECK(norm2(sub(mean, full)) < 1e-14);
  }
}

TEST_CASE("subset-variance law by exhaustive enumeration, n <= 6") {
  RngStream gen(85, 0);
  for (std::int64_t n = 2; n <= 6; ++n) {
    FiniteSumProblem p = make_pl_quadratic(gen, n, 3, 0.2, 1.5);
    DenseVector x{0.5, -1.0, 0.25};
    DenseVector full;
    eval_full_gradient(p, x, full);
    double sum_sq = 0.0;
    DenseVector gi(3);
    for (std::int64_t i = 0; i < n; ++i) {
      p.grad_i(i, x, gi);
      sum_sq += norm2_sq(sub(gi, full));
    }
    for (std::int64_t b = 1; b <= n; ++b) {
      double mean_dev = 0.0;
      int count = 0;
      for_each_subset(n, b, [&](const std::vector<std::int64_t>& idx) {
        IndexBatch batch;
        batch.indices = idx;
        DenseVector g;
        eval_batch_gradient(p, batch, x, g);
        mean_dev += norm2_sq(sub(g, full));
        ++count;
      });
      mean_dev /= count;
      const double bound = (b < n ? 1.0 : 0.0) / (static_cast<double>(b) * static_cast<double>(n)) * sum_sq;
      CHECK(mean_dev <= bound + 1e-12);
    }
  }
}

TEST_CASE("ledger: batch evaluation charges the honest counter only") {
  RngStream gen(86, 0);
  FiniteSumProblem p = make_pl_quadratic(gen, 10, 2, 0.1, 1.0);
  SfoLedger ledger;
  DenseVector g;
  IndexBatch b;
  b.indices = {1, 3, 8};
  eval_batch_gradient(p, b, {0.0, 0.0}, g, &ledger);
  CHECK(ledger.honest_count() == 3);
  CHECK(ledger.paper_count() == 0);
  eval_full_gradient(p, {0.0, 0.0}, g);  // metric path, no ledger argument
  CHECK(ledger.honest_count() == 3);
}

TEST_CASE("empirical gradient-dominance constant under l1 is reported, not asserted") {
  RngStream gen(87, 0);
  FiniteSumProblem p = make_pl_quadratic(gen, 15, 4, 0.1, 1.0, Regularizer::l1(0.05));
  RngStream probe(87, 1);
  std::vector<DenseVector> pts;
  for (int i = 0; i < 50; ++i) {
    DenseVector x(4);
    for (auto& v : x) v = 2.0 * probe.next_gaussian();
    pts.push_back(std::move(x));
  }
  const double mu_hat = estimate_pl_mu(p, ProximalFamily::euclidean(), 0.5, pts);
  MESSAGE("empirical gradient-dominance constant under l1: ", mu_hat);
  CHECK(mu_hat > 0.0);  // diagnostic: existence, no claim about its value
}
