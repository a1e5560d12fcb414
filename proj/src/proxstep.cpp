#include "vrmd/proxstep.hpp"

#include <cmath>
#include <stdexcept>

namespace vrmd {

double soft_threshold(double z, double tau) {
  if (z > tau) return z - tau;
  if (z < -tau) return z + tau;
  return 0.0;
}

namespace {

void check_step_args(double alpha, const DenseVector& drift, const DenseVector& anchor,
                     const Regularizer& reg) {
  if (!(alpha > 0.0)) throw std::invalid_argument("prox_step: alpha must be positive");
  check_same_dim(drift, anchor);
  if (reg.kind != RegKind::kZero && reg.kind != RegKind::kL1) {
    throw UnsupportedConfig("prox_step: unsupported regularizer kind");
  }
}

}  // namespace

void prox_step_into(double alpha, const DenseVector& drift, const DenseVector& anchor,
                    const ProximalFamily& family, std::int64_t t, std::int64_t k,
                    const Regularizer& reg, DenseVector& out) {
  check_step_args(alpha, drift, anchor, reg);
  const std::size_t d = anchor.size();
  out.resize(d);
  const bool l1 = reg.kind == RegKind::kL1;
  for (std::size_t i = 0; i < d; ++i) {
    const double h = family.diag_entry(t, k, i);
    const double coef = alpha / h;
    const double z = anchor[i] - coef * drift[i];
    out[i] = l1 ? soft_threshold(z, coef * reg.lambda) : z;
  }
  require_finite(out, "prox_step result");
}

DenseVector prox_step(double alpha, const DenseVector& drift, const DenseVector& anchor,
                      const ProximalFamily& family, std::int64_t t, std::int64_t k,
                      const Regularizer& reg) {
  DenseVector out;
  prox_step_into(alpha, drift, anchor, family, t, k, reg, out);
  return out;
}

double prox_objective(double alpha, const DenseVector& drift, const DenseVector& anchor,
                      const ProximalFamily& family, std::int64_t t, std::int64_t k,
                      const Regularizer& reg, const DenseVector& y) {
  return alpha * dot(drift, y) + alpha * reg.value(y) + bregman_divergence(family, t, k, y, anchor);
}

DenseVector prox_step_reference(double alpha, const DenseVector& drift, const DenseVector& anchor,
                                const ProximalFamily& family, std::int64_t t, std::int64_t k,
                                const Regularizer& reg) {
  check_step_args(alpha, drift, anchor, reg);
  if (anchor.size() > 16) {
    throw std::invalid_argument("prox_step_reference: supports d <= 16 only");
  }
  const double lambda = reg.kind == RegKind::kL1 ? reg.lambda : 0.0;
  DenseVector out(anchor.size());
  for (std::size_t i = 0; i < anchor.size(); ++i) {
    const double h = family.diag_entry(t, k, i);
    const double v = drift[i];
    const double a = anchor[i];
    // per-coordinate objective: alpha*v*y + alpha*lambda*|y| + (h/2)(y - a)^2
    auto obj = [&](double y) {
      const double dy = y - a;
      return alpha * v * y + alpha * lambda * std::fabs(y) + 0.5 * h * dy * dy;
    };
    // the minimizer satisfies h|y - a| <= alpha(|v| + lambda)
    const double radius = alpha * (std::fabs(v) + lambda) / h + 1.0;
    double lo = a - radius;
    double hi = a + radius;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = obj(x1);
    double f2 = obj(x2);
    while (hi - lo > 1e-10) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - inv_phi * (hi - lo);
        f1 = obj(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + inv_phi * (hi - lo);
        f2 = obj(x2);
      }
    }
    out[i] = 0.5 * (lo + hi);
  }
  return out;
}

}  // namespace vrmd
