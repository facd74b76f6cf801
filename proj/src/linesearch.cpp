#include "fadl/linesearch.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fadl/errors.hpp"
#include "fadl/vector_ops.hpp"

namespace fadl {

void LineSearchConfig::validate() const {
  if (!(alpha > 0.0 && alpha < beta && beta < 1.0)) throw InputError("line search needs 0 < alpha < beta < 1");
  if (!(t_init > 0.0)) throw InputError("t_init must be positive");
  if (!(expand > 1.0)) throw InputError("expand factor must exceed 1");
  if (!(shrink > 0.0 && shrink < 1.0)) throw InputError("shrink factor must lie in (0, 1)");
  if (max_probes < 1 || max_brackets < 0) throw InputError("probe budgets must be positive");
  if (!(minimizer_tol >= 0.0)) throw InputError("minimizer_tol must be non-negative");
}

PhiValue ray_loss_sum(const Objective& objective, const Shard& shard, std::span<const double> z,
                      std::span<const double> e, double t) {
  const Dataset& data = objective.data();
  PhiValue out;
  for (std::size_t k = 0; k < shard.size(); ++k) {
    const double y = data.y(shard[k]);
    const double zk = z[k] + t * e[k];
    out.value += loss_value(objective.loss(), zk, y);
    out.derivative += detail::loss_first_unchecked(objective.loss(), zk, y) * e[k];
  }
  return out;
}

PhiValue ray_loss_change(const Objective& objective, const Shard& shard, std::span<const double> z,
                         std::span<const double> e, double t) {
  const Dataset& data = objective.data();
  PhiValue out;
  for (std::size_t k = 0; k < shard.size(); ++k) {
    const double y = data.y(shard[k]);
    out.value += detail::loss_change_unchecked(objective.loss(), z[k], t * e[k], y);
    out.derivative += detail::loss_first_unchecked(objective.loss(), z[k] + t * e[k], y) * e[k];
  }
  return out;
}

RestrictedObjective::RestrictedObjective(const Objective& objective, std::span<const double> w_r,
                                         std::span<const double> d_r)
    : objective_(&objective),
      all_(objective.data().all_indices()),
      z_(objective.margins(w_r, all_)),
      e_(objective.margins(d_r, all_)),
      w_norm2_(norm2_sq(w_r)),
      wd_dot_(dot(w_r, d_r)),
      d_norm2_(norm2_sq(d_r)) {}

PhiValue RestrictedObjective::operator()(double t) const {
  PhiValue out = ray_loss_sum(*objective_, all_, z_, e_, t);
  const double lambda = objective_->lambda();
  out.value += 0.5 * lambda * (w_norm2_ + 2.0 * t * wd_dot_ + t * t * d_norm2_);
  out.derivative += lambda * (wd_dot_ + t * d_norm2_);
  return out;
}

bool armijo_wolfe_accepts(PhiValue at_zero, double t, PhiValue at_t, double alpha, double beta) {
  return std::isfinite(at_t.value) && at_t.value <= at_zero.value + alpha * t * at_zero.derivative &&
         at_t.derivative >= beta * at_zero.derivative;
}

LineSearchResult armijo_wolfe_search(const RayFunction& phi, PhiValue at_zero, const LineSearchConfig& cfg) {
  cfg.validate();
  const double f0 = at_zero.value;
  const double g0 = at_zero.derivative;
  if (!(g0 < 0.0)) throw InputError("line search direction is not a descent direction");

  auto armijo = [&](double t, const PhiValue& v) { return v.value <= f0 + cfg.alpha * t * g0; };
  auto wolfe = [&](const PhiValue& v) { return v.derivative >= cfg.beta * g0; };

  LineSearchResult res;
  auto probe = [&](double t) {
    ++res.probes;
    return phi(t);
  };

  // Bracket: lo fails Wolfe (t < t_beta), hi fails Armijo (t > t_alpha).
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  double t = cfg.t_init;
  PhiValue v;
  for (;;) {
    if (res.probes >= cfg.max_probes)
      throw LineSearchError("no Armijo-Wolfe step found within " + std::to_string(cfg.max_probes) + " probes");
    v = probe(t);
    const bool ok_a = std::isfinite(v.value) && armijo(t, v);
    if (!ok_a) {
      hi = t;
      t = lo > 0.0 ? 0.5 * (lo + hi) : cfg.shrink * t;
    } else if (!wolfe(v)) {
      lo = t;
      t = std::isinf(hi) ? cfg.expand * t : 0.5 * (lo + hi);
    } else {
      break;
    }
  }
  res.t = t;
  res.at_t = v;

  // Refine toward the ray minimizer; phi' is increasing, so keep a sign bracket.
  const double tol = cfg.minimizer_tol * std::abs(g0);
  if (std::abs(v.derivative) <= tol) return res;
  double a = 0.0, da = g0;                                          // phi'(a) < 0
  double b = std::numeric_limits<double>::infinity(), db = 0.0;     // phi'(b) > 0
  auto absorb = [&](double tp, const PhiValue& vp) {
    if (vp.derivative < 0.0) {
      if (tp > a) a = tp, da = vp.derivative;
    } else if (tp < b) {
      b = tp, db = vp.derivative;
    }
    if (std::isfinite(vp.value) && armijo(tp, vp) && wolfe(vp) && vp.value < res.at_t.value) {
      res.t = tp;
      res.at_t = vp;
    }
  };
  absorb(t, v);
  for (int step = 0; step < cfg.max_brackets && res.probes < cfg.max_probes; ++step) {
    double tp;
    if (std::isinf(b)) {
      tp = cfg.expand * a;
    } else {
      if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * b) break;
      // zero of the secant of phi' = minimizer of the quadratic interpolant
      tp = a - da * (b - a) / (db - da);
      const double width = b - a;
      if (!(tp > a + 0.01 * width && tp < b - 0.01 * width)) tp = 0.5 * (a + b);
    }
    const double width_before = std::isinf(b) ? 0.0 : b - a;
    PhiValue vp = probe(tp);
    absorb(tp, vp);
    if (std::abs(vp.derivative) <= tol) break;
    // bisect when interpolation did not halve the bracket
    if (!std::isinf(b) && width_before > 0.0 && b - a > 0.5 * width_before && res.probes < cfg.max_probes) {
      const double tm = 0.5 * (a + b);
      PhiValue vm = probe(tm);
      absorb(tm, vm);
      if (std::abs(vm.derivative) <= tol) break;
    }
  }
  return res;
}

LineSearchResult armijo_wolfe_search(const RestrictedObjective& restricted, double g_dot_d,
                                     const LineSearchConfig& config) {
  if (!(g_dot_d < 0.0)) throw InputError("line search direction is not a descent direction");
  PhiValue at_zero = restricted(0.0);
  at_zero.derivative = g_dot_d;
  return armijo_wolfe_search([&](double t) { return restricted(t); }, at_zero, config);
}

double theorem2_rate(double alpha, double beta, double sigma, double lipschitz, double cos_theta) {
  if (!(alpha > 0.0 && alpha < beta && beta < 1.0)) throw InputError("rate needs 0 < alpha < beta < 1");
  if (!(sigma > 0.0 && sigma <= lipschitz)) throw InputError("rate needs 0 < sigma <= L");
  if (!(cos_theta > 0.0 && cos_theta <= 1.0)) throw InputError("rate needs cos(theta) in (0, 1]");
  const double ratio = sigma / lipschitz;
  const double delta = 1.0 - 2.0 * alpha * (1.0 - beta) * ratio * ratio * cos_theta * cos_theta;
  if (delta >= 1.0) return std::nextafter(1.0, 0.0);
  if (delta <= 0.0) return std::numeric_limits<double>::min();
  return delta;
}

}  // namespace fadl
