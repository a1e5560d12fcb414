#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "vrmd/rng.hpp"
#include "vrmd/vec.hpp"

namespace vrmd {

class SfoLedger;

enum class RegKind { kZero, kL1 };

// Convex nonsmooth regularizer h(x).
struct Regularizer {
  RegKind kind = RegKind::kZero;
  double lambda = 0.0;

  static Regularizer zero() { return {}; }
  static Regularizer l1(double lambda);

  double value(const DenseVector& x) const;
};

enum class ProblemKind { kLinearLeastSquares, kSigmoidRegression, kPlQuadratic, kCustom };

// Constants consumed by the parameter-derivation formulas. L is always an
// analytic upper bound; sigma2 and Delta_F may be estimated.
struct ProblemConstants {
  double L = 1.0;
  double sigma2 = 0.0;
  std::optional<double> mu;
  std::optional<double> F_star;
  std::optional<double> Delta_F;
};

// Finite-sum objective F(x) = (1/n) sum_i f_i(x) + h(x). Component oracles are
// pure; problems are immutable after construction and safe to share.
struct FiniteSumProblem {
  std::int64_t n = 0;
  int d = 0;
  ProblemKind kind = ProblemKind::kCustom;
  std::function<double(std::int64_t i, const DenseVector& x)> value_i;
  std::function<void(std::int64_t i, const DenseVector& x, DenseVector& out)> grad_i;
  Regularizer reg;
  ProblemConstants consts;
  std::optional<DenseVector> minimizer;  // closed form when known
};

// f_i(x) = (sigmoid(a_i . x) - b_i)^2 on planted data; smooth, nonconvex.
FiniteSumProblem make_sigmoid_regression(RngStream& rng, std::int64_t n, int d, double noise,
                                         Regularizer reg = Regularizer::zero());

// f_i(x) = (1/2)(x - c_i)' D (x - c_i) with shared diagonal D, spectrum in
// [mu, L]. Satisfies the P-L condition with constant mu when h = 0; F_star and
// the minimizer are returned in closed form.
FiniteSumProblem make_pl_quadratic(RngStream& rng, std::int64_t n, int d, double mu, double L,
                                   Regularizer reg = Regularizer::zero());

// f_i(x) = (1/2)(a_i . x - b_i)^2; convex sanity case.
FiniteSumProblem make_linear_least_squares(RngStream& rng, std::int64_t n, int d, double noise,
                                           Regularizer reg = Regularizer::zero());

double eval_F(const FiniteSumProblem& p, const DenseVector& x);

// Smooth part value only, (1/n) sum_i f_i(x).
double eval_f_mean(const FiniteSumProblem& p, const DenseVector& x);

// Mean of component gradients in a fixed index-ascending pairwise order, so a
// batch equal to the full index set reproduces this bit for bit. Metric
// evaluations use this path and never touch the SFO ledger.
void eval_full_gradient(const FiniteSumProblem& p, const DenseVector& x, DenseVector& out);

// Mean gradient over a batch; charges |batch| component evaluations to the
// honest counter of the ledger when one is attached.
void eval_batch_gradient(const FiniteSumProblem& p, const IndexBatch& batch, const DenseVector& x,
                         DenseVector& out, SfoLedger* ledger = nullptr);

// Exact finite-population gradient variance maximized over probe points:
// max_x (1/n) sum_i ||grad f_i(x) - grad f(x)||^2.
double estimate_sigma2(const FiniteSumProblem& p, const std::vector<DenseVector>& probes);

}  // namespace vrmd
