#pragma once

#include <cstdint>

#include "vrmd/bregman.hpp"
#include "vrmd/problems.hpp"
#include "vrmd/vec.hpp"

namespace vrmd {

// Raised for (family, regularizer) pairs without a closed-form step.
struct UnsupportedConfig : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// soft(z, tau) = sign(z) * max(|z| - tau, 0); ties at |z| = tau resolve to 0.
double soft_threshold(double z, double tau);

// Mirror-descent step: argmin_y { alpha <v, y> + alpha h(y) + B_psi(y, anchor) }
// for the separable families. Coordinatewise, with H the family diagonal at
// (t, k):   y_i = soft(anchor_i - (alpha/H_i) v_i, (alpha/H_i) lambda)
// (the threshold disappears for h = 0). The coefficient alpha/H_i is formed as
// a single division so that a scaled family with c and step alpha lands on
// exactly the same iterate as the euclidean family with step alpha/c.
void prox_step_into(double alpha, const DenseVector& drift, const DenseVector& anchor,
                    const ProximalFamily& family, std::int64_t t, std::int64_t k,
                    const Regularizer& reg, DenseVector& out);

DenseVector prox_step(double alpha, const DenseVector& drift, const DenseVector& anchor,
                      const ProximalFamily& family, std::int64_t t, std::int64_t k,
                      const Regularizer& reg);

// Numerical reference for prox_step: per-coordinate golden-section search on
// the separable objective, interval tolerance 1e-10. Exists only to validate
// the closed form; requires d <= 16.
DenseVector prox_step_reference(double alpha, const DenseVector& drift, const DenseVector& anchor,
                                const ProximalFamily& family, std::int64_t t, std::int64_t k,
                                const Regularizer& reg);

// Value of the step objective at y (used by the oracle cross-checks).
double prox_objective(double alpha, const DenseVector& drift, const DenseVector& anchor,
                      const ProximalFamily& family, std::int64_t t, std::int64_t k,
                      const Regularizer& reg, const DenseVector& y);

}  // namespace vrmd
