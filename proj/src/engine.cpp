#include "fadl/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "fadl/cost_model.hpp"
#include "fadl/errors.hpp"
#include "fadl/loss.hpp"
#include "fadl/rng.hpp"

namespace fadl {

std::string_view to_string(Method method) { return method == Method::FADL ? "fadl" : "sqm"; }

Method parse_method(std::string_view name) {
  if (name == "fadl") return Method::FADL;
  if (name == "sqm") return Method::SQM;
  throw InputError("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(CombineWeights weights) {
  return weights == CombineWeights::Uniform ? "uniform" : "proportional";
}

CombineWeights parse_combine_weights(std::string_view name) {
  if (name == "uniform") return CombineWeights::Uniform;
  if (name == "proportional") return CombineWeights::Proportional;
  throw InputError("unknown combine weights '" + std::string(name) + "'");
}

std::string_view to_string(WarmStart warm) { return warm == WarmStart::Zero ? "zero" : "sgd-average"; }

WarmStart parse_warm_start(std::string_view name) {
  if (name == "zero") return WarmStart::Zero;
  if (name == "sgd-average") return WarmStart::LocalSgdAverage;
  throw InputError("unknown warm start '" + std::string(name) + "'");
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::GradientTolerance: return "gradient-tolerance";
    case StopReason::TargetGap: return "target-gap";
    case StopReason::MaxOuter: return "max-outer";
    case StopReason::Stalled: return "stalled";
  }
  return "?";
}

void RunConfig::validate() const {
  if (!(eps_g > 0.0 && eps_g < 1.0)) throw InputError("eps_g must lie in (0, 1)");
  if (nodes < 1) throw InputError("node count must be at least 1");
  if (max_outer < 0) throw InputError("max_outer must be non-negative");
  if (warm_epochs < 1) throw InputError("warm start epochs must be at least 1");
  if (target_gap && !f_star) throw InputError("target_gap requires f_star");
  if (target_gap && !(*target_gap > 0.0)) throw InputError("target_gap must be positive");
  if (f_star && !std::isfinite(*f_star)) throw InputError("f_star must be finite");
  if (angle_theta && !(*angle_theta > 0.0 && *angle_theta < std::numbers::pi / 2)) throw InputError("angle theta must lie in (0, pi/2)");
  if (!(sqm_cg_tol > 0.0 && sqm_cg_tol < 1.0)) throw InputError("sqm_cg_tol must lie in (0, 1)");
  if (sqm_cg_max < 1) throw InputError("sqm_cg_max must be at least 1");
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  linesearch.validate();
  inner.validate();
}

bool same_trajectory(const RunMetrics& a, const RunMetrics& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    MetricsRecord x = a[i], y = b[i];
    x.elapsed_seconds = y.elapsed_seconds = 0.0;
    if (!(x == y)) return false;
  }
  return true;
}

namespace {

void check_convex(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InputError("combine weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InputError("combine weights must sum to 1");
}

void require_descent(std::span<const double> g, std::span<const double> d) {
  const double gd = dot(g, d);
  if (!(-gd > 0.0))
    throw StagnationError("combined direction is not a descent direction (g.d = " + std::to_string(gd) +
                          ", ||d|| = " + std::to_string(norm2(d)) + ")");
}

std::vector<std::size_t> shard_sizes(CommChannel& comm) {
  const auto replies = comm.exchange([](NodeState& s) {
    NodeReply r;
    r.scalars = {static_cast<double>(s.shard.size())};
    return r;
  });
  std::vector<std::size_t> out;
  for (const auto& r : replies) out.push_back(static_cast<std::size_t>(r.scalars[0]));
  return out;
}

struct GradientState {
  double f = 0.0;
  Vec g;
};

// Broadcast w; nodes cache margins and grad L_p, reply with it and L_p(w).
GradientState distributed_gradient(CommChannel& comm, const Vec& w, bool keep_curvature) {
  const Objective& obj = comm.objective();
  comm.count_broadcast_vector();
  const auto replies = comm.exchange([&obj, &w, keep_curvature](NodeState& s) {
    s.margins_z = obj.margins(w, s.shard);
    s.local_grad_L = obj.loss_gradient_from_margins(s.margins_z, s.shard);
    if (keep_curvature) s.curvature = obj.curvature_from_margins(s.margins_z, s.shard);
    NodeReply r;
    r.vector = s.local_grad_L;
    r.scalars = {obj.loss_from_margins(s.margins_z, s.shard)};
    return r;
  });
  GradientState out;
  out.g = comm.reduce_vectors(replies);
  const double loss = comm.reduce_scalars(replies)[0];
  axpy(obj.lambda(), w, out.g);
  out.f = 0.5 * obj.lambda() * norm2_sq(w) + loss;
  return out;
}

class RunRecorder {
 public:
  RunRecorder(const RunConfig& cfg, const CommChannel& comm)
      : cfg_(cfg), comm_(comm), start_(std::chrono::steady_clock::now()) {
    const auto& data = comm.objective().data();
    nz_ = static_cast<double>(data.nz());
    m_ = static_cast<double>(data.m());
  }

  MetricsRecord& add(std::uint64_t r, double f, double grad_norm, double cost_units) {
    MetricsRecord rec;
    rec.run_id = cfg_.run_id;
    rec.method = std::string(to_string(cfg_.method));
    rec.family = cfg_.method == Method::FADL ? std::string(to_string(cfg_.family)) : "-";
    rec.nodes = comm_.node_count();
    rec.r = r;
    rec.f = f;
    rec.grad_norm = grad_norm;
    if (cfg_.f_star) rec.rel_gap = (f - *cfg_.f_star) / std::abs(*cfg_.f_star);
    rec.comm_passes = comm_.ledger().vector_reductions;
    rec.probes = probes;
    rec.inner_iters = inner_iters;
    rec.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    rec.cost_units = cost_units;
    metrics.push_back(rec);
    return metrics.back();
  }

  double fadl_cost(std::uint64_t outer) const {
    return total_cost(fadl_profile(nz_, m_, static_cast<double>(comm_.node_count()), cfg_.gamma,
                                   cfg_.inner.khat, static_cast<double>(outer)));
  }
  double sqm_cost(std::uint64_t passes) const {
    return total_cost(sqm_profile(nz_, m_, static_cast<double>(comm_.node_count()), cfg_.gamma,
                                  static_cast<double>(passes)));
  }

  std::optional<StopReason> stop_test(double grad_norm, double g0_norm, std::uint64_t r) const {
    if (grad_norm <= cfg_.eps_g * g0_norm) return StopReason::GradientTolerance;
    if (cfg_.target_gap && metrics.back().rel_gap && *metrics.back().rel_gap <= *cfg_.target_gap)
      return StopReason::TargetGap;
    if (r >= static_cast<std::uint64_t>(cfg_.max_outer)) return StopReason::MaxOuter;
    return std::nullopt;
  }

  RunMetrics metrics;
  std::uint64_t probes = 0;
  std::uint64_t inner_iters = 0;

 private:
  const RunConfig& cfg_;
  const CommChannel& comm_;
  std::chrono::steady_clock::time_point start_;
  double nz_ = 0.0, m_ = 0.0;
};

Vec initial_point(const RunConfig& config, CommChannel& comm, std::optional<Vec> w0) {
  const std::size_t m = comm.objective().dim();
  if (w0) {
    if (w0->size() != m) throw InputError("initial point has wrong dimension");
    return std::move(*w0);
  }
  if (config.warm_start == WarmStart::LocalSgdAverage)
    return warm_start_average(comm, config.warm_epochs, mix_seed(config.seed, 0x5744));
  return Vec(m, 0.0);
}

}  // namespace

std::vector<double> node_weights(CombineWeights scheme, const std::vector<std::size_t>& sizes) {
  if (sizes.empty()) throw InputError("no nodes");
  std::vector<double> out(sizes.size(), 1.0 / static_cast<double>(sizes.size()));
  if (scheme == CombineWeights::Proportional) {
    const double total = static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}));
    if (total == 0.0) throw InputError("all shards are empty");
    for (std::size_t p = 0; p < sizes.size(); ++p) out[p] = static_cast<double>(sizes[p]) / total;
  }
  return out;
}

Vec combine_directions(const std::vector<Vec>& directions, std::span<const double> weights,
                       std::span<const double> g) {
  if (directions.size() != weights.size()) throw InputError("one weight per direction required");
  check_convex(weights);
  Vec d(g.size(), 0.0);
  for (std::size_t p = 0; p < directions.size(); ++p) {
    if (directions[p].empty()) continue;
    if (directions[p].size() != g.size()) throw InputError("direction has wrong dimension");
    axpy(weights[p], directions[p], d);
  }
  require_descent(g, d);
  return d;
}

std::vector<Shard> canonical_shards(std::vector<Shard> shards) {
  for (auto& s : shards) std::sort(s.begin(), s.end());
  std::stable_sort(shards.begin(), shards.end(), [](const Shard& a, const Shard& b) {
    if (a.empty() || b.empty()) return !a.empty() && b.empty();
    return a.front() < b.front();
  });
  return shards;
}

Vec warm_start_average(CommChannel& comm, int epochs, std::uint64_t seed) {
  if (epochs < 1) throw InputError("warm start epochs must be at least 1");
  const Objective& obj = comm.objective();
  const double P = static_cast<double>(comm.node_count());
  const auto replies = comm.exchange([&obj, epochs, seed, P](NodeState& s) {
    const Dataset& data = obj.data();
    const std::size_t m = obj.dim();
    NodeReply r;
    r.vector.assign(m, 0.0);
    if (s.shard.empty()) return r;
    const double np = static_cast<double>(s.shard.size());
    const double reg = obj.lambda() / (P * np);  // per-example share of lambda/P
    double max_sq = 0.0;
    for (std::size_t i : s.shard) max_sq = std::max(max_sq, data.x(i).norm2_sq());
    const double eta = 1.0 / (reg + curvature_bound(obj.loss()) * max_sq);
    Rng rng(mix_seed(seed, s.node_id));
    Shard order = s.shard;
    Vec& w = r.vector;
    for (int e = 0; e < epochs; ++e) {
      for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
      for (std::size_t i : order) {
        const auto& x = data.x(i);
        const double coef = detail::loss_first_unchecked(obj.loss(), x.dot(w), data.y(i));
        scale(1.0 - eta * reg, w);
        x.axpy_into(-eta * coef, w);
      }
    }
    return r;
  });
  const std::vector<double> uniform(comm.node_count(), 1.0 / P);
  return comm.reduce_vectors(replies, uniform);
}

RunResult run_fadl(const RunConfig& config, CommChannel& comm, std::optional<Vec> w0) {
  config.validate();
  if (config.nodes != comm.node_count()) throw InputError("config node count does not match the channel");
  const Objective& obj = comm.objective();
  const std::vector<double> weights = node_weights(config.combine, shard_sizes(comm));

  RunResult res;
  RunRecorder rec(config, comm);
  Vec w = initial_point(config, comm, std::move(w0));
  GradientState gs = distributed_gradient(comm, w, false);
  const double g0 = norm2(gs.g);
  rec.add(0, gs.f, g0, 0.0);
  std::uint64_t r = 0;
  std::optional<StopReason> stop = rec.stop_test(g0, g0, r);
  while (!stop) {
    // Local approximations and inner solves.
    comm.count_broadcast_vector();
    const ApproxFamily family = config.family;
    const std::size_t P = comm.node_count();
    const auto replies = comm.exchange([&](NodeState& s) {
      NodeReply out;
      out.scalars = {0.0};
      if (s.shard.empty()) return out;
      const ApproxSpec spec =
          build_approx(family, obj, s.shard, w, gs.g, P, s.node_id, s.margins_z, s.local_grad_L);
      InnerOptimizerConfig inner = config.inner;
      inner.seed = mix_seed(config.inner.seed, r, s.node_id);
      InnerResult ir = minimize_inner(spec, inner);
      out.scalars[0] = ir.inner_iters_used;
      if (ir.descent_ok) {
        out.vector = sub(ir.w_p, w);
        out.flag = 1;
      }
      return out;
    });
    bool any_ok = false;
    for (const auto& rep : replies) {
      any_ok = any_ok || rep.flag == 1;
      rec.inner_iters += static_cast<std::uint64_t>(rep.scalars[0]);
    }
    Vec d = comm.reduce_vectors(replies, weights);
    if (!any_ok) {
      d = gs.g;
      scale(-1.0, d);
    }
    require_descent(gs.g, d);
    if (config.angle_theta && !angle_check(gs.g, d, *config.angle_theta))
      throw StagnationError("direction violates the angle condition at r = " + std::to_string(r));
    const double cos_angle = -dot(gs.g, d) / (norm2(gs.g) * norm2(d));

    // Ray margins, then the line search on reduced phi.
    comm.count_broadcast_vector();
    comm.exchange([&obj, &d](NodeState& s) {
      s.margins_e = obj.margins(d, s.shard);
      return NodeReply{};
    });
    const double lam = obj.lambda();
    const double wd = dot(w, d), dd = norm2_sq(d);
    // phi(t) - phi(0), so that progress far below the scale of f stays visible
    const RayFunction ray = [&](double t) {
      comm.count_broadcast_scalar();
      const auto probe = comm.exchange([&obj, t](NodeState& s) {
        const PhiValue v = ray_loss_change(obj, s.shard, s.margins_z, s.margins_e, t);
        NodeReply out;
        out.scalars = {v.value, v.derivative};
        return out;
      });
      const auto sums = comm.reduce_scalars(probe);
      return PhiValue{lam * t * (wd + 0.5 * t * dd) + sums[0], lam * (wd + t * dd) + sums[1]};
    };
    const LineSearchResult ls = armijo_wolfe_search(ray, PhiValue{0.0, dot(gs.g, d)}, config.linesearch);
    rec.probes += static_cast<std::uint64_t>(ls.probes);
    axpy(ls.t, d, w);
    ++r;

    GradientState next = distributed_gradient(comm, w, false);
    if (!(next.f < gs.f)) {
      stop = StopReason::Stalled;
      break;
    }
    gs = std::move(next);
    const double gnorm = norm2(gs.g);
    MetricsRecord& row = rec.add(r, gs.f, gnorm, rec.fadl_cost(r));
    row.step = ls.t;
    row.cos_angle = cos_angle;
    stop = rec.stop_test(gnorm, g0, r);
  }
  res.w = std::move(w);
  res.metrics = std::move(rec.metrics);
  res.stop = *stop;
  res.ledger = comm.ledger();
  return res;
}

RunResult run_sqm(const RunConfig& config, CommChannel& comm, std::optional<Vec> w0) {
  constexpr int kMaxRejections = 60;
  config.validate();
  if (config.nodes != comm.node_count()) throw InputError("config node count does not match the channel");
  const Objective& obj = comm.objective();
  const double lam = obj.lambda();
  const std::size_t m = obj.dim();

  RunResult res;
  RunRecorder rec(config, comm);
  Vec w = initial_point(config, comm, std::move(w0));
  GradientState gs = distributed_gradient(comm, w, true);
  const double g0 = norm2(gs.g);
  double radius = g0;
  bool first_step = true;
  rec.add(0, gs.f, g0, rec.sqm_cost(comm.ledger().vector_reductions));
  std::uint64_t r = 0;
  std::optional<StopReason> stop = rec.stop_test(g0, g0, r);

  auto hessian_vector = [&](const Vec& v) {
    comm.count_broadcast_vector();
    const auto replies = comm.exchange([&obj, &v](NodeState& s) {
      NodeReply out;
      out.vector = obj.weighted_gram_product(s.curvature, v, s.shard);
      return out;
    });
    Vec hv = comm.reduce_vectors(replies);
    axpy(lam, v, hv);
    return hv;
  };

  while (!stop) {
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxRejections && !accepted; ++attempt) {
      // Steihaug CG with one reduction per Hessian-vector product.
      Vec step(m, 0.0), resid = gs.g;
      scale(-1.0, resid);
      Vec dir = resid;
      double rr = norm2_sq(resid);
      const double cg_stop = config.sqm_cg_tol * norm2(gs.g);
      for (int it = 0; it < config.sqm_cg_max; ++it) {
        if (std::sqrt(rr) <= cg_stop) break;
        const Vec hd = hessian_vector(dir);
        ++rec.inner_iters;
        const double dhd = dot(dir, hd);
        if (!(dhd > 0.0)) break;
        const double alpha = rr / dhd;
        axpy(alpha, dir, step);
        if (norm2(step) > radius) {
          axpy(-alpha, dir, step);
          const double sd = dot(step, dir), dn = norm2_sq(dir), ss = norm2_sq(step);
          const double rad = radius * radius - ss;
          const double disc = std::sqrt(std::max(0.0, sd * sd + dn * rad));
          const double tau = sd >= 0.0 ? rad / (sd + disc) : (disc - sd) / dn;
          axpy(tau, dir, step);
          axpy(-tau, hd, resid);
          break;
        }
        axpy(-alpha, hd, resid);
        const double rr_new = norm2_sq(resid);
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t j = 0; j < m; ++j) dir[j] = resid[j] + beta * dir[j];
      }
      const double prered = -0.5 * (dot(gs.g, step) - dot(step, resid));
      const double snorm = norm2(step);
      if (!(prered > 0.0) || snorm == 0.0) break;

      // f(w + s) - f(w), term by term from the cached margins.
      comm.count_broadcast_vector();
      const auto trial = comm.exchange([&obj, &step](NodeState& s) {
        const auto delta = obj.margins(step, s.shard);
        const auto& data = obj.data();
        double change = 0.0;
        for (std::size_t k = 0; k < s.shard.size(); ++k) {
          const double y = data.y(s.shard[k]);
          change += detail::loss_value_unchecked(obj.loss(), s.margins_z[k] + delta[k], y) -
                    detail::loss_value_unchecked(obj.loss(), s.margins_z[k], y);
        }
        NodeReply out;
        out.scalars = {change};
        return out;
      });
      const double loss_change = comm.reduce_scalars(trial)[0];
      const double actred = -(lam * dot(w, step) + 0.5 * lam * norm2_sq(step) + loss_change);
      if (!std::isfinite(actred)) break;
      radius = tron_radius_update(radius, snorm, dot(gs.g, step), actred, prered, first_step);
      first_step = false;
      if (actred > kTronEta0 * prered && actred > 0.0) {
        Vec w_new = w;
        axpy(1.0, step, w_new);
        GradientState next = distributed_gradient(comm, w_new, true);
        if (!(next.f < gs.f)) break;
        const double cos_angle = -dot(gs.g, step) / (norm2(gs.g) * snorm);
        w = std::move(w_new);
        gs = std::move(next);
        ++r;
        const double gnorm = norm2(gs.g);
        MetricsRecord& row = rec.add(r, gs.f, gnorm, rec.sqm_cost(comm.ledger().vector_reductions));
        row.step = 1.0;
        row.cos_angle = cos_angle;
        accepted = true;
      }
    }
    if (!accepted) {
      stop = StopReason::Stalled;
      break;
    }
    stop = rec.stop_test(rec.metrics.back().grad_norm, g0, r);
  }
  res.w = std::move(w);
  res.metrics = std::move(rec.metrics);
  res.stop = *stop;
  res.ledger = comm.ledger();
  return res;
}

RunResult run(const RunConfig& config, CommChannel& comm, std::optional<Vec> w0) {
  return config.method == Method::FADL ? run_fadl(config, comm, std::move(w0)) : run_sqm(config, comm, std::move(w0));
}

double reference_optimum(const Objective& objective, double tol, int max_iters) {
  // Newton-CG directions (Quadratic approximation on a single node, solved
  // nearly exactly) followed by the ray search; robust on the squared hinge,
  // where the generalized Hessian model is poor away from the current point.
  Shard all = objective.data().all_indices();
  SequentialChannel comm(objective, {all});
  RunConfig cfg;
  cfg.method = Method::FADL;
  cfg.family = ApproxFamily::Quadratic;
  cfg.eps_g = tol;
  cfg.max_outer = max_iters;
  cfg.inner.khat = 50;
  cfg.inner.cg_tol = 1e-6;
  cfg.inner.cg_max = static_cast<int>(std::max<std::size_t>(100, std::min<std::size_t>(objective.dim(), 5000)));
  cfg.run_id = "reference";
  const RunResult res = run_fadl(cfg, comm);
  return res.metrics.back().f;
}

}  // namespace fadl
