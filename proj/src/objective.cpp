#include "fadl/objective.hpp"

#include <cmath>
#include <string>

#include "fadl/errors.hpp"
#include "fadl/rng.hpp"

namespace fadl {

Objective::Objective(const Dataset& data, LossKind loss, double lambda)
    : data_(&data), loss_(loss), lambda_(lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be a positive finite number");
}

void Objective::check_shard(const Shard& shard) const {
  for (std::size_t i : shard)
    if (i >= data_->n()) throw InputError("shard index " + std::to_string(i) + " out of range");
}

void Objective::check_weights(std::span<const double> w) const {
  if (w.size() != dim())
    throw InputError("weight vector has length " + std::to_string(w.size()) + ", expected " +
                     std::to_string(dim()));
}

std::vector<double> Objective::margins(std::span<const double> w, const Shard& shard) const {
  std::vector<double> z(shard.size());
  for (std::size_t k = 0; k < shard.size(); ++k) z[k] = data_->x(shard[k]).dot(w);
  return z;
}

double Objective::loss_from_margins(std::span<const double> z, const Shard& shard) const {
  double s = 0.0;
  for (std::size_t k = 0; k < shard.size(); ++k) s += loss_value(loss_, z[k], data_->y(shard[k]));
  return s;
}

Vec Objective::combine_rows(std::span<const double> coef, const Shard& shard) const {
  Vec out(dim(), 0.0);
  for (std::size_t k = 0; k < shard.size(); ++k)
    if (coef[k] != 0.0) data_->x(shard[k]).axpy_into(coef[k], out);
  return out;
}

Vec Objective::loss_gradient_from_margins(std::span<const double> z, const Shard& shard) const {
  std::vector<double> coef(shard.size());
  for (std::size_t k = 0; k < shard.size(); ++k) coef[k] = loss_derivatives(loss_, z[k], data_->y(shard[k])).first;
  return combine_rows(coef, shard);
}

std::vector<double> Objective::curvature_from_margins(std::span<const double> z, const Shard& shard) const {
  std::vector<double> d(shard.size());
  for (std::size_t k = 0; k < shard.size(); ++k) d[k] = loss_derivatives(loss_, z[k], data_->y(shard[k])).second;
  return d;
}

Vec Objective::weighted_gram_product(std::span<const double> weights, std::span<const double> v,
                                     const Shard& shard) const {
  std::vector<double> coef(shard.size());
  for (std::size_t k = 0; k < shard.size(); ++k)
    coef[k] = weights[k] == 0.0 ? 0.0 : weights[k] * data_->x(shard[k]).dot(v);
  return combine_rows(coef, shard);
}

double Objective::value(std::span<const double> w) const {
  check_weights(w);
  const Shard all = data_->all_indices();
  return 0.5 * lambda_ * norm2_sq(w) + loss_from_margins(margins(w, all), all);
}

double Objective::shard_loss(std::span<const double> w, const Shard& shard) const {
  check_weights(w);
  check_shard(shard);
  return loss_from_margins(margins(w, shard), shard);
}

Vec Objective::gradient(std::span<const double> w) const {
  check_weights(w);
  const Shard all = data_->all_indices();
  Vec g = loss_gradient_from_margins(margins(w, all), all);
  axpy(lambda_, w, g);
  return g;
}

Vec Objective::shard_loss_gradient(std::span<const double> w, const Shard& shard) const {
  check_weights(w);
  check_shard(shard);
  return loss_gradient_from_margins(margins(w, shard), shard);
}

Vec Objective::hessian_vector(std::span<const double> w_anchor, std::span<const double> v, const Shard& shard) const {
  check_weights(w_anchor);
  check_weights(v);
  check_shard(shard);
  const auto curv = curvature_from_margins(margins(w_anchor, shard), shard);
  return weighted_gram_product(curv, v, shard);
}

double Objective::gram_spectral_bound(int iters, const Shard& shard) const {
  if (iters < 1) throw InputError("power iteration needs at least one iteration");
  const std::size_t m = dim();
  if (m == 0 || shard.empty()) return 0.0;
  Rng rng(0x5eedULL);
  Vec v(m);
  for (double& x : v) x = rng.uniform() + 0.5;  // strictly positive start
  scale(1.0 / norm2(v), v);
  const std::vector<double> ones(shard.size(), 1.0);
  double estimate = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vec u = weighted_gram_product(ones, v, shard);
    const double nu = norm2(u);
    // ||X^T X v|| for unit v never exceeds lambda_max
    estimate = std::max(estimate, nu);
    if (nu == 0.0) break;
    scale(1.0 / nu, u);
    v = std::move(u);
  }
  return 1.1 * estimate;
}

double Objective::estimate_lipschitz(int iters) const {
  return lambda_ + curvature_bound(loss_) * gram_spectral_bound(iters, data_->all_indices());
}

double Objective::estimate_lipschitz(int iters, const Shard& shard) const {
  check_shard(shard);
  return lambda_ + curvature_bound(loss_) * gram_spectral_bound(iters, shard);
}

}  // namespace fadl
