#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vrmd {

// Dense d-dimensional point/gradient. Plain contiguous doubles; all public
// operations keep entries finite.
using DenseVector = std::vector<double>;

inline void check_same_dim(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
}

inline bool all_finite(const DenseVector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void require_finite(const DenseVector& v, const char* what) {
  if (!all_finite(v)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

inline double dot(const DenseVector& a, const DenseVector& b) {
  check_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2_sq(const DenseVector& a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return s;
}

inline double norm2(const DenseVector& a) { return std::sqrt(norm2_sq(a)); }

inline double l1_norm(const DenseVector& a) {
  double s = 0.0;
  for (double x : a) s += std::fabs(x);
  return s;
}

// y += a * x
inline void axpy(double a, const DenseVector& x, DenseVector& y) {
  check_same_dim(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void add_inplace(DenseVector& acc, const DenseVector& x) {
  check_same_dim(acc, x);
  for (std::size_t i = 0; i < x.size(); ++i) acc[i] += x[i];
}

inline DenseVector hadamard(const DenseVector& a, const DenseVector& b) {
  check_same_dim(a, b);
  DenseVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

inline DenseVector scale(double a, const DenseVector& x) {
  DenseVector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i];
  return out;
}

inline DenseVector sub(const DenseVector& a, const DenseVector& b) {
  check_same_dim(a, b);
  DenseVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

inline DenseVector add(const DenseVector& a, const DenseVector& b) {
  check_same_dim(a, b);
  DenseVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline double max_abs_diff(const DenseVector& a, const DenseVector& b) {
  check_same_dim(a, b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline bool value_equal(const DenseVector& a, const DenseVector& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace vrmd
