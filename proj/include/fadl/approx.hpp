#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "fadl/dataset.hpp"
#include "fadl/objective.hpp"
#include "fadl/vector_ops.hpp"

namespace fadl {

/// Member of the node-local approximation family. With d = w - w_r and
/// gL = grad L(w_r) = g_r - lambda w_r:
///   Linear     lambda/2||w||^2 + L_p(w)   + (gL - grad L_p(w_r)).d
///   Hybrid     Linear + (P-1)/2 d^T H_p d
///   Quadratic  lambda/2||w||^2 + gL.d     + P/2 d^T H_p d
///   Nonlinear  lambda/2||w||^2 + P L_p(w) + (gL - P grad L_p(w_r)).d
/// where H_p is the Hessian of L_p at w_r. Constant terms are dropped.
enum class ApproxFamily { Linear, Hybrid, Quadratic, Nonlinear };

std::string_view to_string(ApproxFamily family);
ApproxFamily parse_family(std::string_view name);

/// State of one approximation evaluated at a point; lets optimizers reuse the
/// margin pass across value, gradient and Hessian-vector products.
struct ApproxPoint {
  Vec w;
  double value = 0.0;
  Vec gradient;
  std::vector<double> margins;     // x_k.w for the shard
  std::vector<double> hv_weights;  // per-shard-example curvature weights at w
};

/// Node-local approximation f_hat_p of f anchored at w_r.
///
/// Satisfies gradient consistency (grad f_hat_p(w_r) = g_r) and is
/// lambda-strongly convex. Immutable once built.
class ApproxSpec {
 public:
  ApproxFamily family() const { return family_; }
  const Objective& objective() const { return *objective_; }
  const Shard& shard() const { return shard_; }
  const Vec& anchor_w() const { return anchor_w_; }
  const Vec& anchor_g() const { return anchor_g_; }
  std::size_t node_count() const { return node_count_; }
  std::size_t node_id() const { return node_id_; }
  /// z_i = w_r.x_i for the shard, in shard order.
  const std::vector<double>& cached_margins() const { return anchor_margins_; }
  /// grad L_p(w_r), computed locally from the cached margins.
  const Vec& local_loss_gradient() const { return local_grad_; }

  double value(std::span<const double> w) const;
  Vec gradient(std::span<const double> w) const;
  /// lambda v + family curvature times v.
  Vec hessian_vector(std::span<const double> w, std::span<const double> v) const;

  ApproxPoint evaluate(std::span<const double> w) const;
  /// f_hat_p(at.w + step) - f_hat_p(at.w), summed term by term so that small
  /// changes keep their relative accuracy far below the scale of f_hat_p itself.
  double value_change(const ApproxPoint& at, std::span<const double> step) const;
  Vec hessian_vector(const ApproxPoint& at, std::span<const double> v) const;

  /// Upper estimate of the gradient Lipschitz constant of f_hat_p:
  /// lambda + c_l * kappa * 1.1 * lambda_max(X_p^T X_p), kappa = 1 (Linear) or P.
  double estimate_lipschitz(int iters) const;

 private:
  friend ApproxSpec build_approx(ApproxFamily, const Objective&, Shard, Vec, Vec, std::size_t, std::size_t,
                                 std::vector<double>, Vec);

  ApproxSpec() = default;

  /// Curvature weights w_k such that H_hat v = lambda v + sum_k w_k (x_k.v) x_k.
  std::vector<double> hv_weights(std::span<const double> margins_at_w) const;

  ApproxFamily family_ = ApproxFamily::Linear;
  const Objective* objective_ = nullptr;
  Shard shard_;
  Vec anchor_w_;
  Vec anchor_g_;
  std::size_t node_count_ = 1;
  std::size_t node_id_ = 0;
  std::vector<double> anchor_margins_;
  std::vector<double> anchor_first_;  // l'(z_r,k)
  std::vector<double> anchor_curv_;   // l''(z_r,k)
  Vec local_grad_;
  Vec linear_term_;  // coefficient of the linear correction in d
};

/// Builds f_hat_p from the broadcast anchor (w_r, g_r) and the node's shard.
/// anchor_g must be the full gradient at anchor_w. Throws DegenerateShardError
/// when the shard is empty and InputError on bad sizes or P < 1.
ApproxSpec build_approx(ApproxFamily family, const Objective& objective, Shard shard, Vec anchor_w, Vec anchor_g,
                        std::size_t node_count, std::size_t node_id);

/// Variant reusing margins z_i = w_r.x_i and grad L_p(w_r) already held by the node.
ApproxSpec build_approx(ApproxFamily family, const Objective& objective, Shard shard, Vec anchor_w, Vec anchor_g,
                        std::size_t node_count, std::size_t node_id, std::vector<double> anchor_margins,
                        Vec local_loss_gradient);

}  // namespace fadl
