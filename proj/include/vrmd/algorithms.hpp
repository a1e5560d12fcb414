#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vrmd/bregman.hpp"
#include "vrmd/metrics.hpp"
#include "vrmd/problems.hpp"
#include "vrmd/schedule.hpp"
#include "vrmd/vec.hpp"

namespace vrmd {

enum class OutputRule { kUniformSample, kLastIterate };

struct HyperParams {
  double alpha = 0.1;       // constant step size alpha_t
  std::int64_t B = 1;       // outer batch size
  std::int64_t b = 1;       // inner mini-batch size
  std::int64_t K = 1;       // inner-loop length
  std::int64_t T = 1;       // outer rounds
  OutputRule output_rule = OutputRule::kUniformSample;
};

// Test/diagnostic observation points inside the optimizer loops.
struct RunHooks {
  std::function<void(std::int64_t t, const DenseVector& g_t, const DenseVector& x_t)> on_outer;
  std::function<void(std::int64_t t, std::int64_t k, const DenseVector& v, const DenseVector& g_t,
                     const DenseVector& y_next)>
      on_inner;
};

struct RunOptions {
  std::int64_t checkpoint_cadence = 1;
  std::optional<DenseVector> x1;  // default: zero vector
  const RunHooks* hooks = nullptr;
  bool collect_trace = true;
};

struct RunResult {
  DenseVector output;        // selected per output rule
  std::int64_t t_star = 0;   // chosen round; T+1 for last-iterate
  DenseVector last_iterate;  // x_{T+1}
  std::vector<TraceRecord> trace;
  SfoLedger ledger;
  std::uint64_t seed = 0;
  HyperParams hp;
};

// One prox step per round driven by a size-b batch gradient. Covers ProxSGD
// (euclidean), time-varying step sizes (scaled family) and AdaGrad/RMSProp
// baselines (diagonal family, accumulator fed with the batch gradient).
RunResult run_adaptive_smd(const FiniteSumProblem& p, ProximalFamily family,
                           const HyperParams& hp, const Schedule& schedule, std::uint64_t seed,
                           const RunOptions& options = {});

// Variance-reduced double loop: per outer round an anchor gradient g_t over a
// size-B batch, then K inner prox steps with drift
//   v_k = grad_J(y_k) - grad_J(y_1) + g_t
// over fresh size-b batches J. Diagonal families accumulate v_k before each
// step. Output: uniform round sample or last iterate.
RunResult run_svramd(const FiniteSumProblem& p, ProximalFamily family, const HyperParams& hp,
                     const Schedule& schedule, std::uint64_t seed, const RunOptions& options = {});

RunResult run_vr_adagrad(const FiniteSumProblem& p, const HyperParams& hp,
                         const Schedule& schedule, std::uint64_t seed, double m,
                         const RunOptions& options = {});

RunResult run_vr_rmsprop(const FiniteSumProblem& p, const HyperParams& hp,
                         const Schedule& schedule, std::uint64_t seed, double m,
                         double beta = 0.999, const RunOptions& options = {});

// Parameter choices prescribed by the convergence analysis. m is the
// strong-convexity floor of the proximal family, L the smoothness constant,
// eps the target squared stationarity.
//   smd nonconvex:    alpha = m/L, b = n ^ ceil(12 sigma^2/(m^2 eps)),
//                     T = 1 v ceil(8 Delta_F L/(m^2 eps))
//   svramd nonconvex: alpha = m/L, B = n ^ ceil(20 sigma^2/(m^2 eps)),
//                     K = 1 v floor(sqrt(b/20)),
//                     T = 1 v ceil(16 Delta_F L/(m^2 eps K))
//   smd PL:           b = n ^ ceil(2(1+m^2) sigma^2/(eps m^2 mu)),
//                     T = 1 v ceil(log(2 Delta_F/eps)/log(1/gamma)),
//                     gamma = 1 - mu m^2/(2L)
//   svramd PL:        B = n ^ ceil(10 sigma^2/(eps m^2 mu)),
//                     K = 1 v floor(sqrt(b/32)),
//                     T = 1 v ceil(log(2 Delta_F/eps)/(K log(1/gamma))),
//                     gamma = 1 - m^2 mu/(4L)
HyperParams derive_hp_smd_nonconvex(std::int64_t n, double m, double L, double sigma2, double eps,
                                    double delta_F);

HyperParams derive_hp_smd_pl(std::int64_t n, double m, double L, double sigma2, double eps,
                             double mu, double delta_F,
                             std::vector<std::string>* warnings = nullptr);

HyperParams derive_hp_svramd_nonconvex(std::int64_t n, double m, double L, double sigma2,
                                       double eps, double delta_F, std::int64_t b);

HyperParams derive_hp_svramd_pl(std::int64_t n, double m, double L, double sigma2, double eps,
                                double mu, double delta_F, std::int64_t b,
                                std::vector<std::string>* warnings = nullptr);

double pl_contraction_gamma_smd(double m, double L, double mu);
double pl_contraction_gamma_svramd(double m, double L, double mu);

// Step size actually applied at a (1-based) global step under the given
// schedule: scaled families keep alpha constant (the scales carry the
// schedule), shaped schedules on other families modulate alpha via the
// equivalent scale so both realizations move identically.
double alpha_for_step(const HyperParams& hp, const Schedule& schedule,
                      const ProximalFamily& family, std::int64_t step);

// The scaled-euclidean realization of a schedule: c_step for step = 1..total.
ProximalFamily make_scaled_family(const Schedule& schedule, double alpha, double m_floor,
                                  std::int64_t total_steps, std::int64_t inner_len);

}  // namespace vrmd
