#include "vrmd/problems.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "vrmd/metrics.hpp"

namespace vrmd {

Regularizer Regularizer::l1(double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("l1 regularizer: lambda must be nonnegative");
  Regularizer r;
  r.kind = RegKind::kL1;
  r.lambda = lambda;
  return r;
}

double Regularizer::value(const DenseVector& x) const {
  return kind == RegKind::kZero ? 0.0 : lambda * l1_norm(x);
}

namespace {

constexpr std::int64_t kLeaf = 8;

// Index-ascending pairwise accumulation over blocks of kLeaf, merged with a
// binary counter so the summation tree depends only on the term count. The
// same routine serves batch and full-set means, which makes them bit-equal
// for equal index sets.
template <class Emit>
void pairwise_mean(std::int64_t count, int dim, Emit emit, DenseVector& out) {
  std::array<DenseVector, 64> slots;
  std::uint64_t filled = 0;
  DenseVector cur(static_cast<std::size_t>(dim));
  DenseVector tmp(static_cast<std::size_t>(dim));
  const std::int64_t nblocks = (count + kLeaf - 1) / kLeaf;
  for (std::int64_t blk = 0; blk < nblocks; ++blk) {
    const std::int64_t lo = blk * kLeaf;
    const std::int64_t hi = std::min(count, lo + kLeaf);
    emit(lo, cur);
    for (std::int64_t j = lo + 1; j < hi; ++j) {
      emit(j, tmp);
      for (int i = 0; i < dim; ++i) cur[static_cast<std::size_t>(i)] += tmp[static_cast<std::size_t>(i)];
    }
    int lvl = 0;
    while (filled & (1ULL << lvl)) {
      const DenseVector& earlier = slots[static_cast<std::size_t>(lvl)];
      for (int i = 0; i < dim; ++i) {
        cur[static_cast<std::size_t>(i)] = earlier[static_cast<std::size_t>(i)] + cur[static_cast<std::size_t>(i)];
      }
      filled &= ~(1ULL << lvl);
      ++lvl;
    }
    slots[static_cast<std::size_t>(lvl)] = cur;
    filled |= 1ULL << lvl;
  }
  int top = 63;
  while (top >= 0 && !(filled & (1ULL << top))) --top;
  DenseVector acc = slots[static_cast<std::size_t>(top)];
  for (int lvl = top - 1; lvl >= 0; --lvl) {
    if (!(filled & (1ULL << lvl))) continue;
    const DenseVector& later = slots[static_cast<std::size_t>(lvl)];
    for (int i = 0; i < dim; ++i) {
      acc[static_cast<std::size_t>(i)] += later[static_cast<std::size_t>(i)];
    }
  }
  out.resize(static_cast<std::size_t>(dim));
  const auto c = static_cast<double>(count);
  for (int i = 0; i < dim; ++i) out[static_cast<std::size_t>(i)] = acc[static_cast<std::size_t>(i)] / c;
}

double pairwise_mean_scalar(std::int64_t count, const std::function<double(std::int64_t)>& term) {
  std::array<double, 64> slots{};
  std::uint64_t filled = 0;
  const std::int64_t nblocks = (count + kLeaf - 1) / kLeaf;
  for (std::int64_t blk = 0; blk < nblocks; ++blk) {
    const std::int64_t lo = blk * kLeaf;
    const std::int64_t hi = std::min(count, lo + kLeaf);
    double cur = term(lo);
    for (std::int64_t j = lo + 1; j < hi; ++j) cur += term(j);
    int lvl = 0;
    while (filled & (1ULL << lvl)) {
      cur = slots[static_cast<std::size_t>(lvl)] + cur;
      filled &= ~(1ULL << lvl);
      ++lvl;
    }
    slots[static_cast<std::size_t>(lvl)] = cur;
    filled |= 1ULL << lvl;
  }
  int top = 63;
  while (top >= 0 && !(filled & (1ULL << top))) --top;
  double acc = slots[static_cast<std::size_t>(top)];
  for (int lvl = top - 1; lvl >= 0; --lvl) {
    if (filled & (1ULL << lvl)) acc += slots[static_cast<std::size_t>(lvl)];
  }
  return acc / static_cast<double>(count);
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct SigmoidData {
  std::int64_t n;
  int d;
  std::vector<double> A;  // row-major n x d
  std::vector<double> b;
};

struct QuadraticData {
  std::int64_t n;
  int d;
  std::vector<double> D;  // shared diagonal
  std::vector<double> C;  // row-major n x d centers
  DenseVector c_bar;
};

void check_problem_dims(std::int64_t n, int d) {
  if (n < 1 || d < 1) {
    throw std::invalid_argument("problem dimensions must satisfy n >= 1, d >= 1");
  }
}

}  // namespace

FiniteSumProblem make_sigmoid_regression(RngStream& rng, std::int64_t n, int d, double noise,
                                         Regularizer reg) {
  check_problem_dims(n, d);
  if (noise < 0.0) throw std::invalid_argument("sigmoid regression: noise must be nonnegative");
  auto data = std::make_shared<SigmoidData>();
  data->n = n;
  data->d = d;
  data->A.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(d));
  data->b.resize(static_cast<std::size_t>(n));
  const double row_scale = 1.0 / std::sqrt(static_cast<double>(d));
  DenseVector x_true(static_cast<std::size_t>(d));
  for (auto& v : x_true) v = 2.0 * rng.next_gaussian();
  double max_row_sq = 0.0;
  double b_span = 1.0;  // covers max(|b_i|, |1 - b_i|)
  for (std::int64_t i = 0; i < n; ++i) {
    double z = 0.0;
    double row_sq = 0.0;
    for (int j = 0; j < d; ++j) {
      const double a = rng.next_gaussian() * row_scale;
      data->A[static_cast<std::size_t>(i * d + j)] = a;
      z += a * x_true[static_cast<std::size_t>(j)];
      row_sq += a * a;
    }
    const double bi = sigmoid(z) + noise * rng.next_gaussian();
    data->b[static_cast<std::size_t>(i)] = bi;
    max_row_sq = std::max(max_row_sq, row_sq);
    b_span = std::max({b_span, std::fabs(bi), std::fabs(1.0 - bi)});
  }

  // Hessian of (s(a.x) - b)^2 is 2[s'(z)^2 + (s(z) - b)s''(z)] a a', with
  // |s'| <= 1/4 and |s''| <= 1/(6*sqrt(3)); the bracket is bounded by
  // c_sigma = 1/8 + b_span/(3*sqrt(3)).
  const double c_sigma = 0.125 + b_span / (3.0 * std::sqrt(3.0));

  FiniteSumProblem p;
  p.n = n;
  p.d = d;
  p.kind = ProblemKind::kSigmoidRegression;
  p.reg = reg;
  p.consts.L = c_sigma * max_row_sq;
  p.value_i = [data](std::int64_t i, const DenseVector& x) {
    const double* a = data->A.data() + i * data->d;
    double z = 0.0;
    for (int j = 0; j < data->d; ++j) z += a[j] * x[static_cast<std::size_t>(j)];
    const double r = sigmoid(z) - data->b[static_cast<std::size_t>(i)];
    return r * r;
  };
  p.grad_i = [data](std::int64_t i, const DenseVector& x, DenseVector& out) {
    const double* a = data->A.data() + i * data->d;
    double z = 0.0;
    for (int j = 0; j < data->d; ++j) z += a[j] * x[static_cast<std::size_t>(j)];
    const double s = sigmoid(z);
    const double coef = 2.0 * (s - data->b[static_cast<std::size_t>(i)]) * s * (1.0 - s);
    out.resize(static_cast<std::size_t>(data->d));
    for (int j = 0; j < data->d; ++j) out[static_cast<std::size_t>(j)] = coef * a[j];
  };
  return p;
}

FiniteSumProblem make_pl_quadratic(RngStream& rng, std::int64_t n, int d, double mu, double L,
                                   Regularizer reg) {
  check_problem_dims(n, d);
  if (!(mu > 0.0) || mu > L) {
    throw std::invalid_argument("pl quadratic: need 0 < mu <= L");
  }
  auto data = std::make_shared<QuadraticData>();
  data->n = n;
  data->d = d;
  data->D.resize(static_cast<std::size_t>(d));
  if (d == 1) {
    data->D[0] = mu;
  } else {
    // log-spaced spectrum pinned to [mu, L]
    const double lr = std::log(L / mu);
    for (int j = 0; j < d; ++j) {
      data->D[static_cast<std::size_t>(j)] =
          mu * std::exp(lr * static_cast<double>(j) / static_cast<double>(d - 1));
    }
    data->D[0] = mu;
    data->D[static_cast<std::size_t>(d - 1)] = L;
  }
  data->C.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(d));
  for (auto& c : data->C) c = rng.next_gaussian();
  data->c_bar.assign(static_cast<std::size_t>(d), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      data->c_bar[static_cast<std::size_t>(j)] += data->C[static_cast<std::size_t>(i * d + j)];
    }
  }
  for (auto& c : data->c_bar) c /= static_cast<double>(n);

  // F(x) = (1/2)(x - c_bar)'D(x - c_bar) + F_star with
  // F_star = (1/2n) sum_i (c_i - c_bar)'D(c_i - c_bar).
  double f_star = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      const double dev = data->C[static_cast<std::size_t>(i * d + j)] - data->c_bar[static_cast<std::size_t>(j)];
      f_star += data->D[static_cast<std::size_t>(j)] * dev * dev;
    }
  }
  f_star /= 2.0 * static_cast<double>(n);

  FiniteSumProblem p;
  p.n = n;
  p.d = d;
  p.kind = ProblemKind::kPlQuadratic;
  p.reg = reg;
  p.consts.L = L;
  p.consts.mu = mu;
  p.consts.F_star = f_star;
  p.minimizer = data->c_bar;
  p.value_i = [data](std::int64_t i, const DenseVector& x) {
    const double* c = data->C.data() + i * data->d;
    double s = 0.0;
    for (int j = 0; j < data->d; ++j) {
      const double dev = x[static_cast<std::size_t>(j)] - c[j];
      s += data->D[static_cast<std::size_t>(j)] * dev * dev;
    }
    return 0.5 * s;
  };
  p.grad_i = [data](std::int64_t i, const DenseVector& x, DenseVector& out) {
    const double* c = data->C.data() + i * data->d;
    out.resize(static_cast<std::size_t>(data->d));
    for (int j = 0; j < data->d; ++j) {
      out[static_cast<std::size_t>(j)] =
          data->D[static_cast<std::size_t>(j)] * (x[static_cast<std::size_t>(j)] - c[j]);
    }
  };
  return p;
}

FiniteSumProblem make_linear_least_squares(RngStream& rng, std::int64_t n, int d, double noise,
                                           Regularizer reg) {
  check_problem_dims(n, d);
  auto data = std::make_shared<SigmoidData>();
  data->n = n;
  data->d = d;
  data->A.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(d));
  data->b.resize(static_cast<std::size_t>(n));
  const double row_scale = 1.0 / std::sqrt(static_cast<double>(d));
  DenseVector x_true(static_cast<std::size_t>(d));
  for (auto& v : x_true) v = rng.next_gaussian();
  double max_row_sq = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double z = 0.0;
    double row_sq = 0.0;
    for (int j = 0; j < d; ++j) {
      const double a = rng.next_gaussian() * row_scale;
      data->A[static_cast<std::size_t>(i * d + j)] = a;
      z += a * x_true[static_cast<std::size_t>(j)];
      row_sq += a * a;
    }
    data->b[static_cast<std::size_t>(i)] = z + noise * rng.next_gaussian();
    max_row_sq = std::max(max_row_sq, row_sq);
  }
  FiniteSumProblem p;
  p.n = n;
  p.d = d;
  p.kind = ProblemKind::kLinearLeastSquares;
  p.reg = reg;
  p.consts.L = max_row_sq;
  p.value_i = [data](std::int64_t i, const DenseVector& x) {
    const double* a = data->A.data() + i * data->d;
    double z = 0.0;
    for (int j = 0; j < data->d; ++j) z += a[j] * x[static_cast<std::size_t>(j)];
    const double r = z - data->b[static_cast<std::size_t>(i)];
    return 0.5 * r * r;
  };
  p.grad_i = [data](std::int64_t i, const DenseVector& x, DenseVector& out) {
    const double* a = data->A.data() + i * data->d;
    double z = 0.0;
    for (int j = 0; j < data->d; ++j) z += a[j] * x[static_cast<std::size_t>(j)];
    const double r = z - data->b[static_cast<std::size_t>(i)];
    out.resize(static_cast<std::size_t>(data->d));
    for (int j = 0; j < data->d; ++j) out[static_cast<std::size_t>(j)] = r * a[j];
  };
  return p;
}

double eval_f_mean(const FiniteSumProblem& p, const DenseVector& x) {
  return pairwise_mean_scalar(p.n, [&](std::int64_t i) { return p.value_i(i, x); });
}

double eval_F(const FiniteSumProblem& p, const DenseVector& x) {
  return eval_f_mean(p, x) + p.reg.value(x);
}

void eval_full_gradient(const FiniteSumProblem& p, const DenseVector& x, DenseVector& out) {
  require_finite(x, "eval_full_gradient point");
  pairwise_mean(p.n, p.d, [&](std::int64_t i, DenseVector& g) { p.grad_i(i, x, g); }, out);
}

void eval_batch_gradient(const FiniteSumProblem& p, const IndexBatch& batch, const DenseVector& x,
                         DenseVector& out, SfoLedger* ledger) {
  if (batch.indices.empty()) throw std::invalid_argument("eval_batch_gradient: empty batch");
  require_finite(x, "eval_batch_gradient point");
  pairwise_mean(
      batch.size(), p.d,
      [&](std::int64_t j, DenseVector& g) { p.grad_i(batch.indices[static_cast<std::size_t>(j)], x, g); },
      out);
  if (ledger != nullptr) ledger->charge_honest(batch.size());
}

double estimate_sigma2(const FiniteSumProblem& p, const std::vector<DenseVector>& probes) {
  if (p.n < 2) throw std::invalid_argument("estimate_sigma2: need n >= 2");
  if (probes.empty()) throw std::invalid_argument("estimate_sigma2: need at least one probe point");
  double best = 0.0;
  DenseVector mean_g;
  DenseVector g(static_cast<std::size_t>(p.d));
  for (const auto& x : probes) {
    eval_full_gradient(p, x, mean_g);
    const double var = pairwise_mean_scalar(p.n, [&](std::int64_t i) {
      p.grad_i(i, x, g);
      double s = 0.0;
      for (int j = 0; j < p.d; ++j) {
        const double dgj = g[static_cast<std::size_t>(j)] - mean_g[static_cast<std::size_t>(j)];
        s += dgj * dgj;
      }
      return s;
    });
    best = std::max(best, var);
  }
  return best;
}

}  // namespace vrmd
