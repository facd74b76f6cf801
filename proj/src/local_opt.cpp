#include "fadl/local_opt.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "fadl/errors.hpp"
#include "fadl/rng.hpp"

namespace fadl {

std::string_view to_string(InnerMethod method) {
  switch (method) {
    case InnerMethod::TRON:
      return "tron";
    case InnerMethod::LBFGS:
      return "lbfgs";
    case InnerMethod::SVRG:
      return "svrg";
  }
  return "?";
}

InnerMethod parse_inner_method(std::string_view name) {
  if (name == "tron") return InnerMethod::TRON;
  if (name == "lbfgs") return InnerMethod::LBFGS;
  if (name == "svrg") return InnerMethod::SVRG;
  throw InputError("unknown inner method '" + std::string(name) + "'");
}

void InnerOptimizerConfig::validate() const {
  if (khat < 1) throw InputError("khat must be at least 1");
  if (!(cg_tol > 0.0)) throw InputError("cg_tol must be positive");
  if (cg_max < 1) throw InputError("cg_max must be at least 1");
  if (lbfgs_memory < 1) throw InputError("lbfgs_memory must be at least 1");
  if (!std::isfinite(svrg_step)) throw InputError("svrg_step must be finite");
}

namespace {

// Gradient norms below this fraction of ||g_r|| are rounding noise.
constexpr double kStationaryRatio = 1e-14;

struct CgResult {
  Vec step;
  Vec residual;
  int iters = 0;
};

// Steihaug-Toint truncated CG on the model grad.s + 1/2 s^T H s inside ||s|| <= radius.
CgResult truncated_cg(const ApproxSpec& spec, const ApproxPoint& pt, double radius, double tol, int max_iter) {
  const std::size_t m = pt.gradient.size();
  CgResult out;
  out.step.assign(m, 0.0);
  out.residual = pt.gradient;
  scale(-1.0, out.residual);
  Vec dir = out.residual;
  double rr = norm2_sq(out.residual);
  const double stop = tol * norm2(pt.gradient);
  while (out.iters < max_iter) {
    if (std::sqrt(rr) <= stop) break;
    const Vec hd = spec.hessian_vector(pt, dir);
    ++out.iters;
    const double dhd = dot(dir, hd);
    if (!(dhd > 0.0)) break;
    const double alpha = rr / dhd;
    axpy(alpha, dir, out.step);
    if (norm2(out.step) > radius) {
      axpy(-alpha, dir, out.step);
      // tau >= 0 with ||step + tau dir|| = radius
      const double sd = dot(out.step, dir), dd = norm2_sq(dir), ss = norm2_sq(out.step);
      const double rad = radius * radius - ss;
      const double disc = std::sqrt(std::max(0.0, sd * sd + dd * rad));
      const double tau = sd >= 0.0 ? rad / (sd + disc) : (disc - sd) / dd;
      axpy(tau, dir, out.step);
      axpy(-tau, hd, out.residual);
      break;
    }
    axpy(-alpha, hd, out.residual);
    const double rr_new = norm2_sq(out.residual);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t j = 0; j < m; ++j) dir[j] = out.residual[j] + beta * dir[j];
  }
  return out;
}

InnerResult run_tron(const ApproxSpec& spec, const InnerOptimizerConfig& cfg) {
  InnerResult res;
  ApproxPoint pt = spec.evaluate(spec.anchor_w());
  const double g0 = norm2(pt.gradient);
  double radius = g0;
  double offset = 0.0;  // f_hat(v) - f_hat(w_r)
  res.trace.push_back(0.0);
  for (int k = 0; k < cfg.khat; ++k) {
    const double gnorm = norm2(pt.gradient);
    if (gnorm <= kStationaryRatio * g0 || gnorm == 0.0) break;
    CgResult cg = truncated_cg(spec, pt, radius, cfg.cg_tol, cfg.cg_max);
    res.hessian_products += cg.iters;
    ++res.inner_iters_used;
    // model decrease -(g.s + 1/2 s^T H s) = -1/2 (g.s - s.r) since r = -g - H s
    const double gs = dot(pt.gradient, cg.step);
    const double prered = -0.5 * (gs - dot(cg.step, cg.residual));
    const double change = spec.value_change(pt, cg.step);
    const double actred = -change;
    const double snorm = norm2(cg.step);
    if (!(prered > 0.0) || !std::isfinite(actred)) {
      res.trace.push_back(offset);
      break;
    }
    radius = tron_radius_update(radius, snorm, gs, actred, prered, k == 0);
    if (actred > kTronEta0 * prered && actred > 0.0) {
      Vec w = pt.w;
      axpy(1.0, cg.step, w);
      pt = spec.evaluate(w);
      offset += change;
    }
    res.trace.push_back(offset);
  }
  res.w_p = std::move(pt.w);
  res.final_approx_value_drop = -offset;
  return res;
}

// H g product of the two-loop recursion over stored (s, y) pairs.
Vec two_loop(const std::deque<std::pair<Vec, Vec>>& hist, const Vec& grad) {
  Vec q = grad;
  std::vector<double> alpha(hist.size()), rho(hist.size());
  for (std::size_t k = hist.size(); k-- > 0;) {
    rho[k] = 1.0 / dot(hist[k].second, hist[k].first);
    alpha[k] = rho[k] * dot(hist[k].first, q);
    axpy(-alpha[k], hist[k].second, q);
  }
  if (!hist.empty()) {
    const auto& [s, y] = hist.back();
    scale(dot(s, y) / norm2_sq(y), q);
  }
  for (std::size_t k = 0; k < hist.size(); ++k) {
    const double beta = rho[k] * dot(hist[k].second, q);
    axpy(alpha[k] - beta, hist[k].first, q);
  }
  return q;
}

InnerResult run_lbfgs(const ApproxSpec& spec, const InnerOptimizerConfig& cfg) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 60;

  InnerResult res;
  ApproxPoint pt = spec.evaluate(spec.anchor_w());
  ++res.hessian_products;
  const double g0 = norm2(pt.gradient);
  double offset = 0.0;
  res.trace.push_back(0.0);
  std::deque<std::pair<Vec, Vec>> hist;
  for (int k = 0; k < cfg.khat; ++k) {
    const double gnorm = norm2(pt.gradient);
    if (gnorm <= kStationaryRatio * g0 || gnorm == 0.0) break;
    ++res.inner_iters_used;
    Vec dir = two_loop(hist, pt.gradient);
    scale(-1.0, dir);
    double slope = dot(pt.gradient, dir);
    if (!(slope < 0.0)) {
      hist.clear();
      dir = pt.gradient;
      scale(-1.0, dir);
      slope = -gnorm * gnorm;
    }
    double t = hist.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;
    double change = 0.0;
    Vec step;
    bool accepted = false;
    for (int b = 0; b < kMaxBacktracks; ++b) {
      step = dir;
      scale(t, step);
      change = spec.value_change(pt, step);
      if (change <= kArmijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      res.trace.push_back(offset);
      break;
    }
    Vec w = pt.w;
    axpy(1.0, step, w);
    ApproxPoint next = spec.evaluate(w);
    ++res.hessian_products;
    Vec y = sub(next.gradient, pt.gradient);
    if (dot(step, y) > 1e-12 * norm2(step) * norm2(y)) {
      hist.emplace_back(std::move(step), std::move(y));
      if (hist.size() > static_cast<std::size_t>(cfg.lbfgs_memory)) hist.pop_front();
    }
    pt = std::move(next);
    offset += change;
    res.trace.push_back(offset);
  }
  res.w_p = std::move(pt.w);
  res.final_approx_value_drop = -offset;
  return res;
}

std::size_t position_in_shard(const ApproxSpec& spec, std::size_t example) {
  const auto& shard = spec.shard();
  const auto it = std::find(shard.begin(), shard.end(), example);
  if (it == shard.end()) throw InputError("example " + std::to_string(example) + " is not in the node's shard");
  return static_cast<std::size_t>(it - shard.begin());
}

// grad psi_i(w) = n_p l'(w.x_i) x_i + lambda w
Vec psi_gradient(const ApproxSpec& spec, std::span<const double> w, std::size_t example) {
  const Objective& obj = spec.objective();
  const SparseVector& x = obj.data().x(example);
  const double np = static_cast<double>(spec.shard().size());
  const double lp = loss_derivatives(obj.loss(), x.dot(w), obj.data().y(example)).first;
  Vec out(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) out[j] = obj.lambda() * w[j];
  x.axpy_into(np * lp, out);
  return out;
}

// grad psi_i(w) - grad psi_i(snap) + mu
Vec variance_reduced_sample(const ApproxSpec& spec, std::span<const double> w, std::span<const double> snap,
                            std::span<const double> mu, std::size_t example) {
  const Vec gw = psi_gradient(spec, w, example);
  const Vec gs = psi_gradient(spec, snap, example);
  Vec out(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) out[j] = gw[j] - gs[j] + mu[j];
  return out;
}

InnerResult run_svrg(const ApproxSpec& spec, const InnerOptimizerConfig& cfg) {
  if (spec.family() != ApproxFamily::Linear)
    throw UnsupportedError("SVRG inner optimization is defined for the Linear family only");
  const Objective& obj = spec.objective();
  const auto& shard = spec.shard();
  const double np = static_cast<double>(shard.size());
  double eta = cfg.svrg_step;
  if (eta <= 0.0) {
    double max_row = 0.0;
    for (std::size_t i : shard) max_row = std::max(max_row, obj.data().x(i).norm2_sq());
    const double local_lipschitz = obj.lambda() + curvature_bound(obj.loss()) * np * max_row;
    eta = 1.0 / (2.0 * local_lipschitz);
  }
  const std::size_t epoch_len = cfg.svrg_epoch_len ? cfg.svrg_epoch_len : shard.size();
  Rng rng(mix_seed(cfg.seed, spec.node_id()));

  InnerResult res;
  const ApproxPoint start = spec.evaluate(spec.anchor_w());
  Vec snap = spec.anchor_w();
  Vec mu = spec.anchor_g();
  Vec v = snap;
  res.trace.push_back(0.0);
  for (int k = 0; k < cfg.khat; ++k) {
    ++res.inner_iters_used;
    for (std::size_t t = 0; t < epoch_len; ++t) {
      const std::size_t example = shard[rng.below(shard.size())];
      const Vec sample = variance_reduced_sample(spec, v, snap, mu, example);
      axpy(-eta, sample, v);
    }
    snap = v;
    mu = spec.gradient(snap);
    ++res.hessian_products;
    res.trace.push_back(spec.value_change(start, sub(v, spec.anchor_w())));
  }
  res.final_approx_value_drop = -res.trace.back();
  res.w_p = std::move(v);
  return res;
}

}  // namespace

InnerResult minimize_inner(const ApproxSpec& spec, const InnerOptimizerConfig& config) {
  config.validate();
  InnerResult res;
  switch (config.method) {
    case InnerMethod::TRON:
      res = run_tron(spec, config);
      break;
    case InnerMethod::LBFGS:
      res = run_lbfgs(spec, config);
      break;
    case InnerMethod::SVRG:
      res = run_svrg(spec, config);
      break;
  }
  bool finite = true;
  for (double x : res.w_p) finite = finite && std::isfinite(x);
  const Vec d = sub(res.w_p, spec.anchor_w());
  res.descent_ok = finite && -dot(spec.anchor_g(), d) > 0.0;
  return res;
}

Vec svrg_gradient_sample(const ApproxSpec& spec, std::span<const double> w, std::size_t example) {
  if (spec.family() != ApproxFamily::Linear)
    throw UnsupportedError("the SVRG gradient identity holds for the Linear family only");
  spec.objective().check_weights(w);
  position_in_shard(spec, example);
  return variance_reduced_sample(spec, w, spec.anchor_w(), spec.anchor_g(), example);
}

Vec svrg_step(const ApproxSpec& spec, std::span<const double> w, std::size_t example, double eta) {
  const Vec sample = svrg_gradient_sample(spec, w, example);
  Vec out(w.begin(), w.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = w[j] - eta * sample[j];
  return out;
}

double tron_radius_update(double radius, double snorm, double gs, double actred, double prered, bool first_step) {
  constexpr double eta1 = 0.25, eta2 = 0.75;
  constexpr double sigma1 = 0.25, sigma2 = 0.5, sigma3 = 4.0;
  if (first_step) radius = std::min(radius, snorm);
  // f(w + s) - f(w) - g.s
  const double curvature = -actred - gs;
  const double alpha = curvature <= 0.0 ? sigma3 : std::max(sigma1, -0.5 * (gs / curvature));
  if (actred < kTronEta0 * prered) return std::min(std::max(alpha, sigma1) * snorm, sigma2 * radius);
  if (actred < eta1 * prered) return std::max(sigma1 * radius, std::min(alpha * snorm, sigma2 * radius));
  if (actred < eta2 * prered) return std::max(sigma1 * radius, std::min(alpha * snorm, sigma3 * radius));
  return std::max(radius, std::min(alpha * snorm, sigma3 * radius));
}

std::int64_t khat_bound(double sigma, double lipschitz, double zeta, double delta) {
  if (!(sigma > 0.0) || !(lipschitz >= sigma)) throw InputError("khat_bound needs 0 < sigma <= L");
  if (!(zeta > 0.0 && zeta < 1.0)) throw InputError("khat_bound needs zeta in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("khat_bound needs delta in (0, 1)");
  const double k = std::log(lipschitz / (sigma * (1.0 - zeta * zeta))) / std::log(1.0 / delta);
  const double c = std::ceil(k);
  if (c >= static_cast<double>(std::numeric_limits<std::int64_t>::max()))
    return std::numeric_limits<std::int64_t>::max();
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(c));
}

bool angle_check(std::span<const double> g_r, std::span<const double> d, double theta) {
  const double ng = norm2(g_r), nd = norm2(d);
  if (ng == 0.0 || nd == 0.0) throw InputError("angle_check needs non-zero vectors");
  return -dot(g_r, d) >= std::cos(theta) * ng * nd;
}

}  // namespace fadl
