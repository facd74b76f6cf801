#pragma once

// Dense reference computations used to check the sparse, matrix-free code.
// Everything here is written from the formulas directly with Eigen and shares
// nothing with the production paths beyond the Dataset container.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "fadl/approx.hpp"
#include "fadl/dataset.hpp"
#include "fadl/loss.hpp"

namespace fadl::oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline VectorXd to_eigen(std::span<const double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) out[static_cast<Eigen::Index>(j)] = v[j];
  return out;
}

inline Vec from_eigen(const VectorXd& v) { return Vec(v.data(), v.data() + v.size()); }

inline double l0(LossKind k, double z, double y) {
  switch (k) {
    case LossKind::LeastSquares: return 0.5 * (z - y) * (z - y);
    case LossKind::Logistic: {
      const double a = -y * z;
      return a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
    }
    case LossKind::SquaredHinge: {
      const double h = std::max(0.0, 1.0 - y * z);
      return h * h;
    }
  }
  return 0.0;
}

inline double l1(LossKind k, double z, double y) {
  switch (k) {
    case LossKind::LeastSquares: return z - y;
    case LossKind::Logistic: return -y / (1.0 + std::exp(y * z));
    case LossKind::SquaredHinge: return -2.0 * y * std::max(0.0, 1.0 - y * z);
  }
  return 0.0;
}

inline double l2(LossKind k, double z, double y) {
  switch (k) {
    case LossKind::LeastSquares: return 1.0;
    case LossKind::Logistic: {
      const double s = 1.0 / (1.0 + std::exp(-y * z));
      return s * (1.0 - s);
    }
    case LossKind::SquaredHinge: return y * z < 1.0 ? 2.0 : 0.0;
  }
  return 0.0;
}

/// Rows of the given examples as a dense matrix, with their labels.
struct DenseRows {
  MatrixXd X;
  VectorXd y;
};

inline DenseRows dense_rows(const Dataset& data, const Shard& shard) {
  DenseRows out;
  out.X = MatrixXd::Zero(static_cast<Eigen::Index>(shard.size()), static_cast<Eigen::Index>(data.m()));
  out.y = VectorXd(static_cast<Eigen::Index>(shard.size()));
  for (std::size_t k = 0; k < shard.size(); ++k) {
    for (const auto& e : data.x(shard[k]).entries()) out.X(static_cast<Eigen::Index>(k), e.index) = e.value;
    out.y[static_cast<Eigen::Index>(k)] = data.y(shard[k]);
  }
  return out;
}

/// sum_k l(x_k.w, y_k) with gradient and Hessian.
struct DenseLoss {
  DenseRows rows;
  LossKind kind;

  double value(const VectorXd& w) const {
    const VectorXd z = rows.X * w;
    double s = 0.0;
    for (Eigen::Index k = 0; k < z.size(); ++k) s += l0(kind, z[k], rows.y[k]);
    return s;
  }
  VectorXd gradient(const VectorXd& w) const {
    const VectorXd z = rows.X * w;
    VectorXd c(z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) c[k] = l1(kind, z[k], rows.y[k]);
    return rows.X.transpose() * c;
  }
  MatrixXd hessian(const VectorXd& w) const {
    const VectorXd z = rows.X * w;
    VectorXd c(z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) c[k] = l2(kind, z[k], rows.y[k]);
    return rows.X.transpose() * c.asDiagonal() * rows.X;
  }
};

/// f(w) = lambda/2 ||w||^2 + sum_i l(w.x_i, y_i) over the whole dataset.
struct DenseObjective {
  DenseLoss loss;
  double lambda;

  DenseObjective(const Dataset& data, LossKind kind, double lam)
      : loss{dense_rows(data, data.all_indices()), kind}, lambda(lam) {}

  double value(const VectorXd& w) const { return 0.5 * lambda * w.squaredNorm() + loss.value(w); }
  VectorXd gradient(const VectorXd& w) const { return lambda * w + loss.gradient(w); }
  MatrixXd hessian(const VectorXd& w) const {
    MatrixXd H = loss.hessian(w);
    H.diagonal().array() += lambda;
    return H;
  }
};

/// The four node-local approximations written out densely.
struct DenseApprox {
  ApproxFamily family;
  double lambda;
  double P;
  DenseLoss local;
  VectorXd wr, gr;
  // derived at the anchor
  VectorXd gL, gLp;
  MatrixXd Hp;

  DenseApprox(ApproxFamily fam, const Dataset& data, LossKind kind, double lam, const Shard& shard,
              std::size_t nodes, const VectorXd& w_r, const VectorXd& g_r)
      : family(fam), lambda(lam), P(static_cast<double>(nodes)), local{dense_rows(data, shard), kind}, wr(w_r), gr(g_r) {
    gL = gr - lambda * wr;
    gLp = local.gradient(wr);
    Hp = local.hessian(wr);
  }

  double value(const VectorXd& w) const {
    const VectorXd d = w - wr;
    const double reg = 0.5 * lambda * w.squaredNorm();
    switch (family) {
      case ApproxFamily::Linear: return reg + local.value(w) + (gL - gLp).dot(d);
      case ApproxFamily::Hybrid: return reg + local.value(w) + (gL - gLp).dot(d) + 0.5 * (P - 1.0) * d.dot(Hp * d);
      case ApproxFamily::Quadratic: return reg + gL.dot(d) + 0.5 * P * d.dot(Hp * d);
      case ApproxFamily::Nonlinear: return reg + P * local.value(w) + (gL - P * gLp).dot(d);
    }
    return 0.0;
  }
  VectorXd gradient(const VectorXd& w) const {
    const VectorXd d = w - wr;
    switch (family) {
      case ApproxFamily::Linear: return lambda * w + local.gradient(w) + gL - gLp;
      case ApproxFamily::Hybrid: return lambda * w + local.gradient(w) + gL - gLp + (P - 1.0) * (Hp * d);
      case ApproxFamily::Quadratic: return lambda * w + gL + P * (Hp * d);
      case ApproxFamily::Nonlinear: return lambda * w + P * local.gradient(w) + gL - P * gLp;
    }
    return VectorXd();
  }
  MatrixXd hessian(const VectorXd& w) const {
    MatrixXd H;
    switch (family) {
      case ApproxFamily::Linear: H = local.hessian(w); break;
      case ApproxFamily::Hybrid: H = local.hessian(w) + (P - 1.0) * Hp; break;
      case ApproxFamily::Quadratic: H = P * Hp; break;
      case ApproxFamily::Nonlinear: H = P * local.hessian(w); break;
    }
    H.diagonal().array() += lambda;
    return H;
  }
};

/// Damped Newton with backtracking, run until the gradient stops shrinking.
template <class F>
VectorXd newton_minimize(const F& f, VectorXd w, int max_iters = 200, double gtol = 1e-13) {
  const double g0 = std::max(f.gradient(w).norm(), 1e-300);
  for (int it = 0; it < max_iters; ++it) {
    const VectorXd g = f.gradient(w);
    if (g.norm() <= gtol * g0) break;
    const VectorXd d = f.hessian(w).ldlt().solve(-g);
    const double f0 = f.value(w), gd = g.dot(d);
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const VectorXd wn = w + t * d;
      if (f.value(wn) <= f0 + 1e-4 * t * gd) {
        moved = (wn - w).norm() > 0.0;
        w = wn;
        break;
      }
    }
    if (!moved) {
      // at rounding level in f; finish with a pure Newton step if it helps the gradient
      const VectorXd wn = w + d;
      if (f.gradient(wn).norm() < g.norm()) w = wn;
      else break;
    }
  }
  return w;
}

/// Minimizer of t -> f(w + t d) over t > 0 for convex f with f'(0) < 0.
template <class F>
double exact_line_minimizer(const F& f, const VectorXd& w, const VectorXd& d) {
  auto dphi = [&](double t) { return f.gradient(w + t * d).dot(d); };
  double lo = 0.0, hi = 1.0;
  while (dphi(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  for (int k = 0; k < 200 && hi - lo > 1e-16 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (dphi(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Central differences.
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& w, double h = 1e-6) {
  VectorXd g(w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    VectorXd a = w, b = w;
    a[j] += h;
    b[j] -= h;
    g[j] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

inline double cosine(const VectorXd& a, const VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  return na == 0.0 || nb == 0.0 ? 0.0 : a.dot(b) / (na * nb);
}

}  // namespace fadl::oracle
