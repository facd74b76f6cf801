#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fadl/dataset.hpp"
#include "fadl/loss.hpp"
#include "fadl/objective.hpp"

namespace fadl {

struct LineSearchConfig {
  double alpha = 1e-4;  // sufficient decrease (Armijo)
  double beta = 0.9;    // curvature (Wolfe); alpha < beta < 1
  double t_init = 1.0;
  double expand = 2.0;
  double shrink = 0.5;
  int max_brackets = 30;  // refinement steps toward the ray minimizer
  int max_probes = 50;
  /// A probe with |phi'(t)| <= minimizer_tol * |phi'(0)| is taken as the ray minimizer.
  double minimizer_tol = 1e-12;

  void validate() const;
};

/// phi(t) = f(w_r + t d_r) and its derivative in t.
struct PhiValue {
  double value = 0.0;
  double derivative = 0.0;
};

using RayFunction = std::function<PhiValue(double)>;

/// sum_k l(z_k + t e_k, y_{shard[k]}) and its t-derivative. No pass over the data.
PhiValue ray_loss_sum(const Objective& objective, const Shard& shard, std::span<const double> z,
                      std::span<const double> e, double t);

/// sum_k [l(z_k + t e_k) - l(z_k)] and its t-derivative, accurate for small t.
PhiValue ray_loss_change(const Objective& objective, const Shard& shard, std::span<const double> z,
                         std::span<const double> e, double t);

/// f restricted to the ray w_r + t d_r, evaluated from cached margins
/// z_i = w_r.x_i and e_i = d_r.x_i plus three regularizer scalars, using
/// ||w_r + t d_r||^2 = ||w_r||^2 + 2 t w_r.d_r + t^2 ||d_r||^2.
class RestrictedObjective {
 public:
  /// Caches z and e over every example of the objective's dataset.
  RestrictedObjective(const Objective& objective, std::span<const double> w_r, std::span<const double> d_r);

  PhiValue operator()(double t) const;

  double w_norm2() const { return w_norm2_; }
  double wd_dot() const { return wd_dot_; }
  double d_norm2() const { return d_norm2_; }

 private:
  const Objective* objective_;
  Shard all_;
  std::vector<double> z_;
  std::vector<double> e_;
  double w_norm2_;
  double wd_dot_;
  double d_norm2_;
};

inline PhiValue phi(const RestrictedObjective& restricted, double t) { return restricted(t); }

struct LineSearchResult {
  double t = 0.0;
  int probes = 0;  // evaluations at t > 0
  PhiValue at_t;
};

/// Both conditions at t: Armijo phi(t) <= phi(0) + alpha t phi'(0), Wolfe phi'(t) >= beta phi'(0).
bool armijo_wolfe_accepts(PhiValue at_zero, double t, PhiValue at_t, double alpha, double beta);

/// Finds t with phi(t) <= phi(0) + alpha t phi'(0) and phi'(t) >= beta phi'(0).
///
/// Starts at t_init and steps forward or backward until a point satisfying both
/// conditions is found, then refines toward the ray minimizer inside the bracket,
/// returning the best acceptable probe. Throws InputError unless phi'(0) < 0 and
/// LineSearchError if no acceptable point is found within max_probes.
LineSearchResult armijo_wolfe_search(const RayFunction& phi, PhiValue at_zero, const LineSearchConfig& config);

LineSearchResult armijo_wolfe_search(const RestrictedObjective& restricted, double g_dot_d,
                                     const LineSearchConfig& config);

/// Rate bound 1 - 2 alpha (1 - beta) (sigma/L)^2 cos^2(theta), clamped to (0, 1).
double theorem2_rate(double alpha, double beta, double sigma, double lipschitz, double cos_theta);

}  // namespace fadl
