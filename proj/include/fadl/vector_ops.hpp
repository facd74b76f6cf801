#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace fadl {

/// Dense weight-space vector. All reductions below run in index order.
using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

inline double norm2_sq(std::span<const double> a) { return dot(a, a); }
inline double norm2(std::span<const double> a) { return std::sqrt(norm2_sq(a)); }

/// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t j = 0; j < x.size(); ++j) y[j] += a * x[j];
}

inline void scale(double a, std::span<double> x) {
  for (double& v : x) v *= a;
}

inline Vec add(std::span<const double> a, std::span<const double> b) {
  Vec out(a.begin(), a.end());
  axpy(1.0, b, out);
  return out;
}

inline Vec sub(std::span<const double> a, std::span<const double> b) {
  Vec out(a.begin(), a.end());
  axpy(-1.0, b, out);
  return out;
}

/// Cosine of the angle between a and b; 0 when either is the zero vector.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm2(a), nb = norm2(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

}  // namespace fadl
