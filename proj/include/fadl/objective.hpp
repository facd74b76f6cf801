#pragma once

#include <span>
#include <vector>

#include "fadl/dataset.hpp"
#include "fadl/loss.hpp"
#include "fadl/vector_ops.hpp"

namespace fadl {

/// f(w) = lambda/2 ||w||^2 + sum_i l(w.x_i, y_i), evaluable as a whole or per shard.
///
/// Holds a reference to the dataset; the dataset must outlive the objective.
/// Immutable and safe to share across threads. Every reduction runs in a fixed
/// order (shard order, then feature order), so results are reproducible bit for bit.
class Objective {
 public:
  /// Throws InputError unless lambda > 0.
  Objective(const Dataset& data, LossKind loss, double lambda);

  const Dataset& data() const { return *data_; }
  LossKind loss() const { return loss_; }
  double lambda() const { return lambda_; }
  std::size_t dim() const { return data_->m(); }

  /// Full objective including the regularizer.
  double value(std::span<const double> w) const;
  /// L_p(w): loss over the shard only, no regularizer.
  double shard_loss(std::span<const double> w, const Shard& shard) const;

  /// lambda w + sum_i l'(w.x_i) x_i
  Vec gradient(std::span<const double> w) const;
  /// grad L_p(w), no regularizer.
  Vec shard_loss_gradient(std::span<const double> w, const Shard& shard) const;

  /// H_p v = sum_{i in shard} l''(w_anchor.x_i) (x_i.v) x_i. Excludes lambda I.
  Vec hessian_vector(std::span<const double> w_anchor, std::span<const double> v, const Shard& shard) const;

  /// Upper estimate of the gradient Lipschitz constant of f:
  /// lambda + c_l * 1.1 * (power-iteration estimate of lambda_max(X^T X)).
  double estimate_lipschitz(int iters) const;
  /// Same bound for lambda/2||w||^2 + L_p restricted to a shard.
  double estimate_lipschitz(int iters, const Shard& shard) const;

  // Margin-level kernels shared by the approximations and the engine nodes.

  /// z_i = w.x_i for i in shard, in shard order.
  std::vector<double> margins(std::span<const double> w, const Shard& shard) const;
  double loss_from_margins(std::span<const double> z, const Shard& shard) const;
  /// sum_k coef_k x_{shard[k]} with coef_k = l'(z_k); returned vector has length m.
  Vec loss_gradient_from_margins(std::span<const double> z, const Shard& shard) const;
  /// l''(z_k) per shard entry.
  std::vector<double> curvature_from_margins(std::span<const double> z, const Shard& shard) const;
  /// sum_k weight_k (x_{shard[k]}.v) x_{shard[k]}
  Vec weighted_gram_product(std::span<const double> weights, std::span<const double> v, const Shard& shard) const;
  /// sum_k coef_k x_{shard[k]}
  Vec combine_rows(std::span<const double> coef, const Shard& shard) const;

  /// Throws InputError if any index is >= n.
  void check_shard(const Shard& shard) const;
  void check_weights(std::span<const double> w) const;

 private:
  /// 1.1 * power-iteration estimate of lambda_max(X_S^T X_S).
  double gram_spectral_bound(int iters, const Shard& shard) const;

  const Dataset* data_;
  LossKind loss_;
  double lambda_;
};

}  // namespace fadl
