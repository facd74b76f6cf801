#include "fadl/approx.hpp"

#include <cmath>
#include <string>

#include "fadl/errors.hpp"

namespace fadl {

std::string_view to_string(ApproxFamily family) {
  switch (family) {
    case ApproxFamily::Linear:
      return "linear";
    case ApproxFamily::Hybrid:
      return "hybrid";
    case ApproxFamily::Quadratic:
      return "quadratic";
    case ApproxFamily::Nonlinear:
      return "nonlinear";
  }
  return "?";
}

ApproxFamily parse_family(std::string_view name) {
  if (name == "linear") return ApproxFamily::Linear;
  if (name == "hybrid") return ApproxFamily::Hybrid;
  if (name == "quadratic") return ApproxFamily::Quadratic;
  if (name == "nonlinear") return ApproxFamily::Nonlinear;
  throw InputError("unknown approximation family '" + std::string(name) + "'");
}

ApproxSpec build_approx(ApproxFamily family, const Objective& objective, Shard shard, Vec anchor_w, Vec anchor_g,
                        std::size_t node_count, std::size_t node_id) {
  objective.check_weights(anchor_w);
  objective.check_shard(shard);
  auto z = objective.margins(anchor_w, shard);
  Vec local = objective.loss_gradient_from_margins(z, shard);
  return build_approx(family, objective, std::move(shard), std::move(anchor_w), std::move(anchor_g), node_count,
                      node_id, std::move(z), std::move(local));
}

ApproxSpec build_approx(ApproxFamily family, const Objective& objective, Shard shard, Vec anchor_w, Vec anchor_g,
                        std::size_t node_count, std::size_t node_id, std::vector<double> anchor_margins,
                        Vec local_loss_gradient) {
  if (node_count < 1) throw InputError("node count must be at least 1");
  if (node_id >= node_count) throw InputError("node id out of range");
  objective.check_weights(anchor_w);
  objective.check_weights(anchor_g);
  objective.check_weights(local_loss_gradient);
  if (shard.empty()) throw DegenerateShardError("node " + std::to_string(node_id) + " holds no examples");
  objective.check_shard(shard);
  if (anchor_margins.size() != shard.size()) throw InputError("cached margins do not match the shard");

  ApproxSpec spec;
  spec.family_ = family;
  spec.objective_ = &objective;
  spec.node_count_ = node_count;
  spec.node_id_ = node_id;
  spec.anchor_first_.resize(shard.size());
  spec.anchor_curv_.resize(shard.size());
  const Dataset& data = objective.data();
  for (std::size_t k = 0; k < shard.size(); ++k) {
    const auto der = loss_derivatives(objective.loss(), anchor_margins[k], data.y(shard[k]));
    spec.anchor_first_[k] = der.first;
    spec.anchor_curv_[k] = der.second;
  }

  // grad L(w_r) = g_r - lambda w_r is available locally
  Vec full_loss_grad = anchor_g;
  axpy(-objective.lambda(), anchor_w, full_loss_grad);
  const double P = static_cast<double>(node_count);
  switch (family) {
    case ApproxFamily::Linear:
    case ApproxFamily::Hybrid:
      spec.linear_term_ = sub(full_loss_grad, local_loss_gradient);
      break;
    case ApproxFamily::Quadratic:
      spec.linear_term_ = full_loss_grad;
      break;
    case ApproxFamily::Nonlinear:
      spec.linear_term_ = full_loss_grad;
      axpy(-P, local_loss_gradient, spec.linear_term_);
      break;
  }

  spec.shard_ = std::move(shard);
  spec.anchor_w_ = std::move(anchor_w);
  spec.anchor_g_ = std::move(anchor_g);
  spec.anchor_margins_ = std::move(anchor_margins);
  spec.local_grad_ = std::move(local_loss_gradient);
  return spec;
}

std::vector<double> ApproxSpec::hv_weights(std::span<const double> margins_at_w) const {
  const double P = static_cast<double>(node_count_);
  const Dataset& data = objective_->data();
  const LossKind loss = objective_->loss();
  std::vector<double> weights(shard_.size());
  for (std::size_t k = 0; k < shard_.size(); ++k) {
    switch (family_) {
      case ApproxFamily::Linear:
        weights[k] = detail::loss_second_unchecked(loss, margins_at_w[k], data.y(shard_[k]));
        break;
      case ApproxFamily::Hybrid:
        weights[k] = detail::loss_second_unchecked(loss, margins_at_w[k], data.y(shard_[k])) +
                     (P - 1.0) * anchor_curv_[k];
        break;
      case ApproxFamily::Quadratic:
        weights[k] = P * anchor_curv_[k];
        break;
      case ApproxFamily::Nonlinear:
        weights[k] = P * detail::loss_second_unchecked(loss, margins_at_w[k], data.y(shard_[k]));
        break;
    }
  }
  return weights;
}

ApproxPoint ApproxSpec::evaluate(std::span<const double> w) const {
  objective_->check_weights(w);
  const double lambda = objective_->lambda();
  const double P = static_cast<double>(node_count_);
  const Dataset& data = objective_->data();
  const LossKind loss = objective_->loss();

  ApproxPoint pt;
  pt.w.assign(w.begin(), w.end());
  const Vec d = sub(w, anchor_w_);
  const auto z = objective_->margins(w, shard_);

  // Value: regularizer + family loss terms + linear correction (constants dropped).
  double value = 0.5 * lambda * norm2_sq(w) + dot(linear_term_, d);
  double quad = 0.0;  // d^T H_p d from anchor curvature
  double local_loss = 0.0;
  std::vector<double> coef(shard_.size());
  for (std::size_t k = 0; k < shard_.size(); ++k) {
    const double y = data.y(shard_[k]);
    const double xd = z[k] - anchor_margins_[k];
    const double first_diff =
        family_ == ApproxFamily::Quadratic ? 0.0 : detail::loss_first_unchecked(loss, z[k], y) - anchor_first_[k];
    if (family_ != ApproxFamily::Quadratic) local_loss += loss_value(loss, z[k], y);
    if (family_ == ApproxFamily::Hybrid || family_ == ApproxFamily::Quadratic) quad += anchor_curv_[k] * xd * xd;
    switch (family_) {
      case ApproxFamily::Linear:
        coef[k] = first_diff;
        break;
      case ApproxFamily::Hybrid:
        coef[k] = first_diff + (P - 1.0) * anchor_curv_[k] * xd;
        break;
      case ApproxFamily::Quadratic:
        coef[k] = P * anchor_curv_[k] * xd;
        break;
      case ApproxFamily::Nonlinear:
        coef[k] = P * first_diff;
        break;
    }
  }
  switch (family_) {
    case ApproxFamily::Linear:
      value += local_loss;
      break;
    case ApproxFamily::Hybrid:
      value += local_loss + 0.5 * (P - 1.0) * quad;
      break;
    case ApproxFamily::Quadratic:
      value += 0.5 * P * quad;
      break;
    case ApproxFamily::Nonlinear:
      value += P * local_loss;
      break;
  }
  pt.value = value;

  // Gradient written as g_r + (terms vanishing at w_r), exact at the anchor.
  pt.gradient = objective_->combine_rows(coef, shard_);
  axpy(lambda, d, pt.gradient);
  for (std::size_t j = 0; j < pt.gradient.size(); ++j) pt.gradient[j] += anchor_g_[j];

  pt.hv_weights = hv_weights(z);
  pt.margins = z;
  return pt;
}

double ApproxSpec::value_change(const ApproxPoint& at, std::span<const double> step) const {
  objective_->check_weights(step);
  const double lambda = objective_->lambda();
  const double P = static_cast<double>(node_count_);
  const Dataset& data = objective_->data();
  const LossKind loss = objective_->loss();

  // lambda/2 (||w + s||^2 - ||w||^2) + linear_term.s
  double change = lambda * dot(at.w, step) + 0.5 * lambda * norm2_sq(step) + dot(linear_term_, step);
  double loss_change = 0.0;
  double quad_change = 0.0;
  for (std::size_t k = 0; k < shard_.size(); ++k) {
    const double b = data.x(shard_[k]).dot(step);
    if (family_ == ApproxFamily::Hybrid || family_ == ApproxFamily::Quadratic) {
      const double a = at.margins[k] - anchor_margins_[k];
      quad_change += anchor_curv_[k] * (2.0 * a + b) * b;
    }
    if (family_ != ApproxFamily::Quadratic) {
      const double y = data.y(shard_[k]);
      if (!std::isfinite(at.margins[k] + b)) throw InputError("non-finite margin in value_change");
      loss_change += detail::loss_change_unchecked(loss, at.margins[k], b, y);
    }
  }
  switch (family_) {
    case ApproxFamily::Linear:
      change += loss_change;
      break;
    case ApproxFamily::Hybrid:
      change += loss_change + 0.5 * (P - 1.0) * quad_change;
      break;
    case ApproxFamily::Quadratic:
      change += 0.5 * P * quad_change;
      break;
    case ApproxFamily::Nonlinear:
      change += P * loss_change;
      break;
  }
  return change;
}

double ApproxSpec::value(std::span<const double> w) const { return evaluate(w).value; }

Vec ApproxSpec::gradient(std::span<const double> w) const { return evaluate(w).gradient; }

Vec ApproxSpec::hessian_vector(const ApproxPoint& at, std::span<const double> v) const {
  objective_->check_weights(v);
  Vec out = objective_->weighted_gram_product(at.hv_weights, v, shard_);
  axpy(objective_->lambda(), v, out);
  return out;
}

Vec ApproxSpec::hessian_vector(std::span<const double> w, std::span<const double> v) const {
  objective_->check_weights(w);
  const auto z = objective_->margins(w, shard_);
  ApproxPoint pt;
  pt.hv_weights = hv_weights(z);
  return hessian_vector(pt, v);
}

double ApproxSpec::estimate_lipschitz(int iters) const {
  const double kappa = family_ == ApproxFamily::Linear ? 1.0 : static_cast<double>(node_count_);
  const double lambda = objective_->lambda();
  return lambda + kappa * (objective_->estimate_lipschitz(iters, shard_) - lambda);
}

}  // namespace fadl
