#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vrmd/bregman.hpp"
#include "vrmd/problems.hpp"
#include "vrmd/vec.hpp"

namespace vrmd {

// Exact count of component-gradient evaluations. Two conventions are kept:
// the paper-style count charges each inner iteration once (T*B + T*K*b), the
// honest count charges every evaluation actually performed (T*B + 2*T*K*b).
// Metric evaluations never touch either counter.
class SfoLedger {
 public:
  void charge_paper(std::int64_t c) { paper_ += c; }
  void charge_honest(std::int64_t c) { honest_ += c; }
  void mark_round(std::int64_t t) { rounds_.push_back({t, paper_, honest_}); }

  std::int64_t paper_count() const { return paper_; }
  std::int64_t honest_count() const { return honest_; }

  struct RoundMark {
    std::int64_t t;
    std::int64_t paper;
    std::int64_t honest;
  };
  const std::vector<RoundMark>& rounds() const { return rounds_; }

 private:
  std::int64_t paper_ = 0;
  std::int64_t honest_ = 0;
  std::vector<RoundMark> rounds_;
};

// Snapshot taken at the start of outer round t (t = T+1 is the final state).
struct TraceRecord {
  std::int64_t t = 0;
  std::int64_t sfo_paper = 0;
  std::int64_t sfo_honest = 0;
  double F = 0.0;
  double gx_sq = 0.0;
  std::optional<double> gap_opt;  // F - F_star when F_star is known
  double wall_ms = 0.0;
};

// Generalized gradient: (x - x_plus)/alpha where x_plus is the mirror-descent
// step driven by the full gradient. Pure evaluation; the ledger is untouched
// and the family state is read-only.
DenseVector generalized_gradient(const FiniteSumProblem& p, const ProximalFamily& family,
                                 std::int64_t t, std::int64_t k, double alpha,
                                 const DenseVector& x);

// ||g_X||^2 at x.
double stationarity_sq(const FiniteSumProblem& p, const ProximalFamily& family, std::int64_t t,
                       std::int64_t k, double alpha, const DenseVector& x);

struct PlGapCertificate {
  double lhs = 0.0;  // ||g_X||^2
  double rhs = 0.0;  // 2 mu (F(x) - F_star)
};

// Both sides of the gradient-dominance inequality; diagnostic only. Requires
// mu and F_star on the problem.
PlGapCertificate pl_gap_certificate(const FiniteSumProblem& p, const ProximalFamily& family,
                                    double alpha, const DenseVector& x);

// min over points of ||g_X||^2 / (2 (F - F_star)): the best empirical
// gradient-dominance constant at those points. Diagnostic.
double estimate_pl_mu(const FiniteSumProblem& p, const ProximalFamily& family, double alpha,
                      const std::vector<DenseVector>& points);

}  // namespace vrmd
