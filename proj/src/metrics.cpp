#include "vrmd/metrics.hpp"

#include <limits>
#include <stdexcept>

#include "vrmd/proxstep.hpp"

namespace vrmd {

DenseVector generalized_gradient(const FiniteSumProblem& p, const ProximalFamily& family,
                                 std::int64_t t, std::int64_t k, double alpha,
                                 const DenseVector& x) {
  require_finite(x, "generalized_gradient point");
  DenseVector grad;
  eval_full_gradient(p, x, grad);
  DenseVector x_plus;
  prox_step_into(alpha, grad, x, family, t, k, p.reg, x_plus);
  DenseVector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = (x[i] - x_plus[i]) / alpha;
  return g;
}

double stationarity_sq(const FiniteSumProblem& p, const ProximalFamily& family, std::int64_t t,
                       std::int64_t k, double alpha, const DenseVector& x) {
  return norm2_sq(generalized_gradient(p, family, t, k, alpha, x));
}

PlGapCertificate pl_gap_certificate(const FiniteSumProblem& p, const ProximalFamily& family,
                                    double alpha, const DenseVector& x) {
  if (!p.consts.F_star || !p.consts.mu) {
    throw UnsupportedConfig("pl_gap_certificate: problem must carry F_star and mu");
  }
  PlGapCertificate cert;
  cert.lhs = stationarity_sq(p, family, 1, 1, alpha, x);
  cert.rhs = 2.0 * *p.consts.mu * (eval_F(p, x) - *p.consts.F_star);
  return cert;
}

double estimate_pl_mu(const FiniteSumProblem& p, const ProximalFamily& family, double alpha,
                      const std::vector<DenseVector>& points) {
  if (!p.consts.F_star) throw UnsupportedConfig("estimate_pl_mu: problem must carry F_star");
  double mu_hat = std::numeric_limits<double>::infinity();
  for (const auto& x : points) {
    const double gap = eval_F(p, x) - *p.consts.F_star;
    if (gap <= 1e-14) continue;  // too close to the optimum to inform the ratio
    const double lhs = stationarity_sq(p, family, 1, 1, alpha, x);
    mu_hat = std::min(mu_hat, lhs / (2.0 * gap));
  }
  return mu_hat;
}

}  // namespace vrmd
