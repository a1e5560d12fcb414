#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vrmd/vec.hpp"

namespace vrmd {

// Per-coordinate second-moment accumulator backing the diagonal-quadratic
// proximal family. Effective diagonal entry is sqrt(acc_i) + m, so the
// curvature never falls below the additive floor m.
struct DiagonalState {
  DenseVector acc;                  // running sum (or EMA) of squared drifts
  double m = 1e-3;                  // additive strong-convexity floor
  std::optional<double> ema_beta;   // set => EMA accumulator, else global sum

  void update(const DenseVector& v);
  double entry(std::size_t i) const;
};

DiagonalState update_diagonal_state(const DiagonalState& state, const DenseVector& v);

enum class FamilyKind { kEuclidean, kScaledEuclidean, kDiagonalQuadratic };

// Time-indexed strongly convex proximal family. Three shapes:
//   euclidean:           psi(x) = (1/2)||x||^2            (floor 1)
//   scaled-euclidean:    psi_t(x) = (c_t/2)||x||^2        (floor min_t c_t)
//   diagonal-quadratic:  psi(x) = (1/2)<x, H x>, H_ii = sqrt(acc_i) + m
struct ProximalFamily {
  FamilyKind kind = FamilyKind::kEuclidean;
  std::vector<double> scales;  // scaled-euclidean: c at step 1,2,... (1-based)
  std::int64_t inner_len = 1;  // maps (t,k) -> step = (t-1)*inner_len + k
  DiagonalState diag;

  static ProximalFamily euclidean();
  static ProximalFamily scaled(std::vector<double> c_schedule, std::int64_t inner_len = 1);
  static ProximalFamily adagrad(int dim, double m);
  static ProximalFamily rmsprop(int dim, double m, double beta = 0.999);

  // Curvature of coordinate i at time (t, k); constant across i except for
  // the diagonal kind.
  double diag_entry(std::int64_t t, std::int64_t k, std::size_t i) const;

  bool is_diagonal() const { return kind == FamilyKind::kDiagonalQuadratic; }
};

// B_psi(x, y) = psi(x) - psi(y) - <grad psi(y), x - y>. Nonnegative, and
// >= (m/2)||x - y||^2 for the family floor m.
double bregman_divergence(const ProximalFamily& family, std::int64_t t, std::int64_t k,
                          const DenseVector& x, const DenseVector& y);

// Lower bound on the strong convexity over all (t, k).
double strong_convexity_floor(const ProximalFamily& family);

}  // namespace vrmd
