#include "vrmd/bregman.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vrmd {

void DiagonalState::update(const DenseVector& v) {
  require_finite(v, "diagonal state update");
  if (acc.empty()) acc.assign(v.size(), 0.0);
  check_same_dim(acc, v);
  if (ema_beta) {
    const double beta = *ema_beta;
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = beta * acc[i] + (1.0 - beta) * v[i] * v[i];
  } else {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i] * v[i];
  }
}

double DiagonalState::entry(std::size_t i) const {
  const double a = i < acc.size() ? acc[i] : 0.0;
  return std::sqrt(a) + m;
}

DiagonalState update_diagonal_state(const DiagonalState& state, const DenseVector& v) {
  DiagonalState out = state;
  out.update(v);
  return out;
}

ProximalFamily ProximalFamily::euclidean() {
  ProximalFamily f;
  f.kind = FamilyKind::kEuclidean;
  return f;
}

ProximalFamily ProximalFamily::scaled(std::vector<double> c_schedule, std::int64_t inner_len) {
  ProximalFamily f;
  f.kind = FamilyKind::kScaledEuclidean;
  f.scales = std::move(c_schedule);
  f.inner_len = inner_len;
  for (double c : f.scales) {
    if (!(c > 0.0)) throw std::invalid_argument("scaled family: every c_t must be positive");
  }
  return f;
}

ProximalFamily ProximalFamily::adagrad(int dim, double m) {
  if (!(m > 0.0)) throw std::invalid_argument("adagrad family: m must be positive");
  ProximalFamily f;
  f.kind = FamilyKind::kDiagonalQuadratic;
  f.diag.acc.assign(static_cast<std::size_t>(dim), 0.0);
  f.diag.m = m;
  return f;
}

ProximalFamily ProximalFamily::rmsprop(int dim, double m, double beta) {
  if (!(m > 0.0)) throw std::invalid_argument("rmsprop family: m must be positive");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("rmsprop family: beta in (0,1]");
  ProximalFamily f = adagrad(dim, m);
  f.diag.ema_beta = beta;
  return f;
}

double ProximalFamily::diag_entry(std::int64_t t, std::int64_t k, std::size_t i) const {
  switch (kind) {
    case FamilyKind::kEuclidean:
      return 1.0;
    case FamilyKind::kScaledEuclidean: {
      if (scales.empty()) throw std::invalid_argument("scaled family: empty c_t schedule");
      std::int64_t step = (t - 1) * inner_len + k;
      step = std::clamp<std::int64_t>(step, 1, static_cast<std::int64_t>(scales.size()));
      return scales[static_cast<std::size_t>(step - 1)];
    }
    case FamilyKind::kDiagonalQuadratic:
      return diag.entry(i);
  }
  return 1.0;
}

double bregman_divergence(const ProximalFamily& family, std::int64_t t, std::int64_t k,
                          const DenseVector& x, const DenseVector& y) {
  check_same_dim(x, y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += family.diag_entry(t, k, i) * d * d;
  }
  return 0.5 * s;
}

double strong_convexity_floor(const ProximalFamily& family) {
  switch (family.kind) {
    case FamilyKind::kEuclidean:
      return 1.0;
    case FamilyKind::kScaledEuclidean: {
      if (family.scales.empty()) {
        throw std::invalid_argument("strong_convexity_floor: empty c_t schedule");
      }
      return *std::min_element(family.scales.begin(), family.scales.end());
    }
    case FamilyKind::kDiagonalQuadratic:
      return family.diag.m;
  }
  return 1.0;
}

}  // namespace vrmd
