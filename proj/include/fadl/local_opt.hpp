#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fadl/approx.hpp"
#include "fadl/vector_ops.hpp"

namespace fadl {

/// Inner optimizer M applied to f_hat_p for a fixed iteration budget.
enum class InnerMethod { TRON, LBFGS, SVRG };

std::string_view to_string(InnerMethod method);
InnerMethod parse_inner_method(std::string_view name);

struct InnerOptimizerConfig {
  InnerMethod method = InnerMethod::TRON;
  int khat = 10;               // iterations of M per outer iteration
  double cg_tol = 0.1;         // TRON: relative CG residual
  int cg_max = 25;             // TRON: CG iterations per trust-region step
  int lbfgs_memory = 10;       // LBFGS: (s, y) pairs kept
  double svrg_step = 0.0;      // SVRG: eta; <= 0 selects 1/(2 L_local)
  std::size_t svrg_epoch_len = 0;  // SVRG: updates per snapshot; 0 selects n_p
  std::uint64_t seed = 1;

  /// Throws InputError on khat < 1, lbfgs_memory < 1, non-positive tolerances.
  void validate() const;
};

struct InnerResult {
  Vec w_p;
  int inner_iters_used = 0;
  double final_approx_value_drop = 0.0;  // f_hat_p(w_r) - f_hat_p(w_p)
  /// -g_r.(w_p - w_r) > 0. When false the caller must not use w_p as is.
  bool descent_ok = false;
  int hessian_products = 0;  // TRON CG steps; gradient evaluations for the others
  /// f_hat_p(v^k) - f_hat_p(w_r) after each iteration, starting with 0 for v^0.
  std::vector<double> trace;
};

/// Runs config.khat iterations of the chosen method on f_hat_p from v0 = w_r.
/// Stops early only when the gradient of f_hat_p vanishes to rounding level.
/// SVRG requires the Linear family (UnsupportedError otherwise).
InnerResult minimize_inner(const ApproxSpec& spec, const InnerOptimizerConfig& config);

/// grad psi_i(w) - grad psi_i(w_r) + g_r with psi_i(w) = n_p l(w.x_i, y_i) + lambda/2 ||w||^2.
/// Its average over the shard equals grad f_hat_p(w) for the Linear family.
/// `example` is a dataset index that must belong to the shard.
Vec svrg_gradient_sample(const ApproxSpec& spec, std::span<const double> w, std::size_t example);

/// One plain SGD step on f_hat_p: w - eta * svrg_gradient_sample(spec, w, example).
Vec svrg_step(const ApproxSpec& spec, std::span<const double> w, std::size_t example, double eta);

/// Trust-region radius after a step s with ||s|| = snorm, g.s = gs, actual and
/// predicted reductions actred and prered (classic TRON rule, with the
/// interpolated step factor from the quadratic through f, g.s and f(w + s)).
/// first_step additionally caps the radius at snorm.
double tron_radius_update(double radius, double snorm, double gs, double actred, double prered, bool first_step);

/// Steps are accepted when actred > eta0 prered.
inline constexpr double kTronEta0 = 1e-4;

/// ceil(log(L / (sigma (1 - zeta^2))) / log(1/delta)), at least 1.
/// Requires 0 < sigma <= L, zeta and delta in (0, 1).
std::int64_t khat_bound(double sigma, double lipschitz, double zeta, double delta);

/// True iff -g_r.d >= cos(theta) ||g_r|| ||d||. Throws InputError on zero vectors.
bool angle_check(std::span<const double> g_r, std::span<const double> d, double theta);

}  // namespace fadl
