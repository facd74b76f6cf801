#include "fadl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>

#include "fadl/approx.hpp"
#include "fadl/comm.hpp"
#include "fadl/cost_model.hpp"
#include "fadl/data_io.hpp"
#include "fadl/engine.hpp"
#include "fadl/errors.hpp"
#include "fadl/linesearch.hpp"
#include "fadl/local_opt.hpp"
#include "fadl/oracle.hpp"
#include "fadl/rng.hpp"

namespace fadl {

const std::vector<std::string>& property_names() {
  static const std::vector<std::string> names = {
      "gradient-consistency", "hessian-vector",      "angle-lemma5",  "angle-lemma3",
      "glrc-envelope",        "svrg-identity",       "linesearch-interval", "cost-predicate"};
  return names;
}

void VerifyOptions::validate() const {
  if (!(tolerance_scale > 0.0) || !std::isfinite(tolerance_scale))
    throw InputError("tolerance scale must be positive");
  if (property && std::find(property_names().begin(), property_names().end(), *property) == property_names().end())
    throw InputError("unknown property '" + *property + "'");
}

namespace {

constexpr ApproxFamily kFamilies[] = {ApproxFamily::Linear, ApproxFamily::Hybrid, ApproxFamily::Quadratic,
                                      ApproxFamily::Nonlinear};
constexpr LossKind kLosses[] = {LossKind::LeastSquares, LossKind::Logistic, LossKind::SquaredHinge};

// A random small problem with an anchor point and a partition.
struct Instance {
  std::unique_ptr<Dataset> data;
  std::unique_ptr<Objective> objective;
  std::vector<Shard> shards;
  Vec w_r;
  Vec g_r;
};

Instance make_instance(Rng& rng, std::size_t n_max, std::size_t m_max, LossKind loss, double lambda) {
  Instance inst;
  const std::size_t n = 20 + rng.below(n_max - 19);
  const std::size_t m = 3 + rng.below(m_max - 2);
  const double density = 0.3 + 0.7 * rng.uniform();
  inst.data = std::make_unique<Dataset>(synth_classification(n, m, density, 0.9, rng.next()));
  inst.objective = std::make_unique<Objective>(*inst.data, loss, lambda);
  const std::size_t P = 1 + rng.below(4);
  inst.shards = partition(n, P, rng.next(), PartitionScheme::ShuffledRoundRobin).shards();
  inst.w_r.resize(m);
  for (auto& v : inst.w_r) v = 0.3 * rng.normal();
  inst.g_r = inst.objective->gradient(inst.w_r);
  return inst;
}

// Shard-level spectral part of the Lipschitz bound, scaled so lambda / L_hat is near `ratio`.
double lambda_for_ratio(const Dataset& data, LossKind loss, const std::vector<Shard>& shards, double ratio) {
  Objective probe(data, loss, 1.0);
  double spectral = probe.estimate_lipschitz(100) - 1.0;
  for (const auto& s : shards)
    spectral = std::max(spectral, static_cast<double>(shards.size()) * (probe.estimate_lipschitz(100, s) - 1.0));
  return ratio / (1.0 - ratio) * spectral;
}

double lipschitz_bound(const Objective& obj, const ApproxSpec& spec) {
  return std::max(obj.estimate_lipschitz(100), spec.estimate_lipschitz(100));
}

PropertyResult check_gradient_consistency(const VerifyOptions& opt) {
  Rng rng(mix_seed(opt.seed, 1));
  const double tol = 1e-10 * opt.tolerance_scale;
  double worst = 0.0, worst_fd = 0.0;
  int cases = 0;
  for (int k = 0; k < 12; ++k) {
    const LossKind loss = kLosses[k % 3];
    Instance inst = make_instance(rng, 80, 12, loss, 0.1 + rng.uniform());
    const auto& obj = *inst.objective;
    for (ApproxFamily fam : kFamilies) {
      const std::size_t p = rng.below(inst.shards.size());
      const ApproxSpec spec = build_approx(fam, obj, inst.shards[p], inst.w_r, inst.g_r, inst.shards.size(), p);
      worst = std::max(worst, norm2(sub(spec.gradient(inst.w_r), inst.g_r)) / (1.0 + norm2(inst.g_r)));
      // and the gradient at a random point against central differences of the dense oracle
      Vec w = inst.w_r;
      for (auto& v : w) v += 0.2 * rng.normal();
      const oracle::DenseApprox dense(fam, *inst.data, loss, obj.lambda(), inst.shards[p], inst.shards.size(),
                                      oracle::to_eigen(inst.w_r), oracle::to_eigen(inst.g_r));
      const auto fd = oracle::fd_gradient([&](const oracle::VectorXd& v) { return dense.value(v); }, oracle::to_eigen(w));
      const auto g = oracle::to_eigen(spec.gradient(w));
      worst_fd = std::max(worst_fd, (g - fd).norm() / (1.0 + g.norm()));
      ++cases;
    }
  }
  std::ostringstream os;
  os << cases << " cases, max ||grad f_hat(w_r) - g_r||/(1+||g_r||) = " << worst
     << ", max finite-difference error = " << worst_fd;
  return {"gradient-consistency", worst <= tol && worst_fd <= 1e-5 * opt.tolerance_scale, os.str()};
}

PropertyResult check_hessian_vector(const VerifyOptions& opt) {
  Rng rng(mix_seed(opt.seed, 2));
  double worst = 0.0;
  for (int k = 0; k < 12; ++k) {
    const LossKind loss = kLosses[k % 3];
    Instance inst = make_instance(rng, 80, 12, loss, 0.1 + rng.uniform());
    const auto& obj = *inst.objective;
    for (ApproxFamily fam : kFamilies) {
      const std::size_t p = rng.below(inst.shards.size());
      const ApproxSpec spec = build_approx(fam, obj, inst.shards[p], inst.w_r, inst.g_r, inst.shards.size(), p);
      Vec w = inst.w_r, v(obj.dim());
      for (auto& x : w) x += 0.2 * rng.normal();
      for (auto& x : v) x = rng.normal();
      const oracle::DenseApprox dense(fam, *inst.data, loss, obj.lambda(), inst.shards[p], inst.shards.size(),
                                      oracle::to_eigen(inst.w_r), oracle::to_eigen(inst.g_r));
      const oracle::VectorXd expect = dense.hessian(oracle::to_eigen(w)) * oracle::to_eigen(v);
      const oracle::VectorXd got = oracle::to_eigen(spec.hessian_vector(w, v));
      worst = std::max(worst, (got - expect).norm() / (1.0 + expect.norm()));
    }
  }
  std::ostringstream os;
  os << "max relative Hessian-vector error = " << worst;
  return {"hessian-vector", worst <= 1e-10 * opt.tolerance_scale, os.str()};
}

PropertyResult check_angle_exact(const VerifyOptions& opt) {
  Rng rng(mix_seed(opt.seed, 3));
  double worst_margin = std::numeric_limits<double>::infinity();
  int cases = 0;
  for (int k = 0; k < 10; ++k) {
    const LossKind loss = kLosses[k % 3];
    Instance inst = make_instance(rng, 150, 15, loss, 0.05 + rng.uniform());
    const auto& obj = *inst.objective;
    for (ApproxFamily fam : kFamilies) {
      const std::size_t p = rng.below(inst.shards.size());
      const ApproxSpec spec = build_approx(fam, obj, inst.shards[p], inst.w_r, inst.g_r, inst.shards.size(), p);
      const oracle::DenseApprox dense(fam, *inst.data, loss, obj.lambda(), inst.shards[p], inst.shards.size(),
                                      oracle::to_eigen(inst.w_r), oracle::to_eigen(inst.g_r));
      const oracle::VectorXd w_star = oracle::newton_minimize(dense, dense.wr);
      const double c = oracle::cosine(-dense.gr, w_star - dense.wr);
      worst_margin = std::min(worst_margin, c - obj.lambda() / lipschitz_bound(obj, spec));
      ++cases;
    }
  }
  std::ostringstream os;
  os << cases << " exact minimizers, min cos(-g_r, w* - w_r) - lambda/L_hat = " << worst_margin;
  return {"angle-lemma5", worst_margin >= -1e-8 * opt.tolerance_scale, os.str()};
}

PropertyResult check_angle_inexact(const VerifyOptions& opt, std::ostream* log) {
  constexpr double zeta = 0.9;
  Rng rng(mix_seed(opt.seed, 4));
  const int trials = 40;
  int passed = 0;
  for (int k = 0; k < trials; ++k) {
    const LossKind loss = kLosses[k % 3];
    const ApproxFamily fam = kFamilies[(k / 3) % 4];
    Instance inst = make_instance(rng, 150, 15, loss, 1.0);
    const double lambda = lambda_for_ratio(*inst.data, loss, inst.shards, 0.55 + 0.3 * rng.uniform());
    Objective obj(*inst.data, loss, lambda);
    const Vec g_r = obj.gradient(inst.w_r);
    const std::size_t p = rng.below(inst.shards.size());
    const ApproxSpec spec = build_approx(fam, obj, inst.shards[p], inst.w_r, g_r, inst.shards.size(), p);
    const double L = lipschitz_bound(obj, spec);
    const double theta_lo = std::acos(lambda / L) + std::acos(zeta);
    const double theta = 0.5 * (theta_lo + std::numbers::pi / 2);

    // inner contraction measured against the dense minimizer
    const oracle::DenseApprox dense(fam, *inst.data, loss, lambda, inst.shards[p], inst.shards.size(),
                                    oracle::to_eigen(inst.w_r), oracle::to_eigen(g_r));
    const oracle::VectorXd w_star = oracle::newton_minimize(dense, dense.wr);
    const double gap0 = dense.value(dense.wr) - dense.value(w_star);
    InnerOptimizerConfig cfg;
    cfg.khat = 30;
    const InnerResult probe = minimize_inner(spec, cfg);
    double delta = 0.0;
    for (std::size_t j = 0; j + 1 < probe.trace.size(); ++j) {
      const double a = gap0 + probe.trace[j], b = gap0 + probe.trace[j + 1];
      if (a <= 1e-10 * gap0) break;
      delta = std::max(delta, std::max(b, 0.0) / a);
    }
    delta = std::clamp(delta, 1e-12, 1.0 - 1e-12);
    cfg.khat = static_cast<int>(khat_bound(lambda, L, zeta, delta));
    const InnerResult res = minimize_inner(spec, cfg);
    const Vec d = sub(res.w_p, inst.w_r);
    const bool ok = norm2(d) > 0.0 && angle_check(g_r, d, theta);
    passed += ok;
    if (!ok && log)
      *log << "  angle-lemma3 trial " << k << " failed: delta_hat=" << delta << " khat=" << cfg.khat << "\n";
  }
  std::ostringstream os;
  os << passed << "/" << trials << " trials satisfy the angle condition after khat_bound inner iterations";
  return {"angle-lemma3", passed >= (95 * trials + 99) / 100, os.str()};
}

PropertyResult check_glrc_envelope(const VerifyOptions& opt) {
  const Dataset data = synth_classification(400, 20, 0.5, 0.9, mix_seed(opt.seed, 5));
  const double lambda = 1e-2;
  Objective obj(data, LossKind::Logistic, lambda);
  const oracle::DenseObjective dense(data, LossKind::Logistic, lambda);
  const double f_star = dense.value(oracle::newton_minimize(dense, oracle::VectorXd::Zero(20)));
  const double L = obj.estimate_lipschitz(100);
  auto shards = partition(data.n(), 4, opt.seed, PartitionScheme::ShuffledRoundRobin).shards();
  SequentialChannel comm(obj, shards);
  RunConfig cfg;
  cfg.nodes = 4;
  cfg.eps_g = 1e-12;
  cfg.max_outer = 150;
  cfg.f_star = f_star;
  cfg.target_gap = 1e-6;
  const RunResult res = run_fadl(cfg, comm);
  double worst = -1.0;
  for (std::size_t r = 0; r + 1 < res.metrics.size(); ++r) {
    const double a = res.metrics[r].f - f_star, b = res.metrics[r + 1].f - f_star;
    if (a <= 1e-12 * std::abs(f_star)) break;
    const double bound = theorem2_rate(1e-4, 0.9, lambda, L, res.metrics[r + 1].cos_angle);
    worst = std::max(worst, b / a - bound);
  }
  const auto& last = res.metrics.back();
  const bool reached = last.rel_gap && *last.rel_gap <= 1e-6;
  std::ostringstream os;
  os << res.metrics.size() - 1 << " outer iterations, final gap " << (last.rel_gap ? *last.rel_gap : -1.0)
     << ", max(ratio - rate bound) = " << worst;
  return {"glrc-envelope", reached && worst <= 0.0, os.str()};
}

PropertyResult check_svrg_identity(const VerifyOptions& opt) {
  Rng rng(mix_seed(opt.seed, 6));
  bool bitwise = true;
  double worst_avg = 0.0;
  for (int k = 0; k < 10; ++k) {
    const LossKind loss = kLosses[k % 3];
    Instance inst = make_instance(rng, 80, 12, loss, 0.1 + rng.uniform());
    const auto& obj = *inst.objective;
    const auto& data = *inst.data;
    const std::size_t p = rng.below(inst.shards.size());
    const Shard& shard = inst.shards[p];
    const ApproxSpec spec =
        build_approx(ApproxFamily::Linear, obj, shard, inst.w_r, inst.g_r, inst.shards.size(), p);
    Vec w = inst.w_r;
    for (auto& v : w) v += 0.2 * rng.normal();
    const double eta = 0.01;
    const std::size_t i = shard[rng.below(shard.size())];
    // w - eta (grad psi_i(w) - grad psi_i(w_r) + g_r), psi_i = n_p l + lambda/2 ||.||^2
    const double np = static_cast<double>(shard.size());
    const auto& x = data.x(i);
    const double c_w = np * loss_derivatives(loss, x.dot(w), data.y(i)).first;
    const double c_r = np * loss_derivatives(loss, x.dot(inst.w_r), data.y(i)).first;
    Vec psi_w(w.size()), psi_r(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) {
      psi_w[j] = obj.lambda() * w[j];
      psi_r[j] = obj.lambda() * inst.w_r[j];
    }
    for (const auto& e : x.entries()) {
      psi_w[e.index] += c_w * e.value;
      psi_r[e.index] += c_r * e.value;
    }
    Vec expect(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) expect[j] = w[j] - eta * (psi_w[j] - psi_r[j] + inst.g_r[j]);
    bitwise = bitwise && svrg_step(spec, w, i, eta) == expect;

    Vec avg(w.size(), 0.0);
    for (std::size_t ex : shard) axpy(1.0 / np, svrg_gradient_sample(spec, w, ex), avg);
    const Vec g = spec.gradient(w);
    worst_avg = std::max(worst_avg, norm2(sub(avg, g)) / (1.0 + norm2(g)));
  }
  std::ostringstream os;
  os << "single step bit-identical: " << (bitwise ? "yes" : "no") << ", max shard-average error " << worst_avg;
  return {"svrg-identity", bitwise && worst_avg <= 1e-12 * opt.tolerance_scale, os.str()};
}

PropertyResult check_linesearch_interval(const VerifyOptions& opt) {
  // phi(t) = 1/2 (1 - t)^2: f(w) = w^2/2 from w = 1 along d = -1.
  const RayFunction phi = [](double t) { return PhiValue{0.5 * (1.0 - t) * (1.0 - t), t - 1.0}; };
  const PhiValue at_zero = phi(0.0);
  const double alpha = 1e-4, beta = 0.9;
  const double t_beta = 1.0 - beta, t_alpha = 2.0 * (1.0 - alpha);
  double first = -1.0, last = -1.0;
  bool contiguous = true;
  bool inside = false;
  for (int k = 1; k <= 30000; ++k) {
    const double t = k * 1e-4;
    const bool ok = armijo_wolfe_accepts(at_zero, t, phi(t), alpha, beta);
    if (ok) {
      if (first < 0.0) first = t;
      else if (inside == false) contiguous = false;
      last = t;
    }
    inside = ok;
  }
  LineSearchConfig cfg;
  const LineSearchResult res = armijo_wolfe_search(phi, at_zero, cfg);
  const double tol = 1e-3 * opt.tolerance_scale;
  const bool ok = contiguous && std::abs(first - t_beta) <= tol && std::abs(last - t_alpha) <= tol &&
                  res.t >= t_beta && res.t <= t_alpha;
  std::ostringstream os;
  os << "accept set [" << first << ", " << last << "] vs [" << t_beta << ", " << t_alpha << "], search returned t="
     << res.t << " after " << res.probes << " probe(s)";
  return {"linesearch-interval", ok, os.str()};
}

PropertyResult check_cost_predicate(const VerifyOptions&) {
  // gamma = 100, P = 8, khat = 10 gives the threshold nz/m < 40.
  struct Case {
    const char* name;
    double nz, m;
    bool expect;
  };
  const Case cases[] = {{"kdd2010", 0.31e9, 20.21e6, true}, {"url", 0.22e9, 3.23e6, false},
                        {"webspam", 0.98e9, 16.6e6, false}, {"mnist8m", 6.35e9, 784, false},
                        {"rcv", 0.50e8, 47236, false},       {"boundary", 40.0, 1.0, false}};
  int mismatches = 0;
  std::ostringstream os;
  for (const auto& c : cases) {
    const bool got = fadl_faster_predicate(c.nz, c.m, 100, 8, 10);
    mismatches += got != c.expect;
    os << c.name << "=" << (got ? "fadl" : "sqm") << " ";
  }
  return {"cost-predicate", mismatches == 0, os.str()};
}

}  // namespace

std::vector<PropertyResult> run_verify(const VerifyOptions& options, std::ostream* log) {
  options.validate();
  std::vector<PropertyResult> out;
  for (const auto& name : property_names()) {
    if (options.property && *options.property != name) continue;
    PropertyResult res;
    try {
      if (name == "gradient-consistency") res = check_gradient_consistency(options);
      else if (name == "hessian-vector") res = check_hessian_vector(options);
      else if (name == "angle-lemma5") res = check_angle_exact(options);
      else if (name == "angle-lemma3") res = check_angle_inexact(options, log);
      else if (name == "glrc-envelope") res = check_glrc_envelope(options);
      else if (name == "svrg-identity") res = check_svrg_identity(options);
      else if (name == "linesearch-interval") res = check_linesearch_interval(options);
      else res = check_cost_predicate(options);
    } catch (const std::exception& e) {
      res = {name, false, std::string("exception: ") + e.what()};
    }
    if (log) *log << (res.passed ? "PASS " : "FAIL ") << res.name << ": " << res.detail << "\n";
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace fadl
