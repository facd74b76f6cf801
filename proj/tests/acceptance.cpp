// Acceptance checks. Prints one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fadl/approx.hpp"
#include "fadl/comm.hpp"
#include "fadl/cost_model.hpp"
#include "fadl/data_io.hpp"
#include "fadl/engine.hpp"
#include "fadl/linesearch.hpp"
#include "fadl/local_opt.hpp"
#include "fadl/objective.hpp"
#include "fadl/oracle.hpp"
#include "fadl/rng.hpp"

using namespace fadl;
namespace or_ = fadl::oracle;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

constexpr ApproxFamily kFamilies[] = {ApproxFamily::Linear, ApproxFamily::Hybrid, ApproxFamily::Quadratic,
                                      ApproxFamily::Nonlinear};
constexpr LossKind kLosses[] = {LossKind::LeastSquares, LossKind::Logistic, LossKind::SquaredHinge};

struct Instance {
  std::unique_ptr<Dataset> data;
  std::unique_ptr<Objective> obj;
  std::vector<Shard> shards;
  Vec w_r, g_r;
};

Instance random_instance(Rng& rng, std::size_t n_max, std::size_t m_max, LossKind loss, double lambda) {
  Instance in;
  const std::size_t n = 20 + rng.below(n_max - 19);
  const std::size_t m = 3 + rng.below(m_max - 2);
  in.data = std::make_unique<Dataset>(synth_classification(n, m, 0.3 + 0.7 * rng.uniform(), 0.9, rng.next()));
  in.obj = std::make_unique<Objective>(*in.data, loss, lambda);
  in.shards = partition(n, 1 + rng.below(6), rng.next(), PartitionScheme::ShuffledRoundRobin).shards();
  in.w_r.resize(m);
  for (auto& v : in.w_r) v = 0.3 * rng.normal();
  in.g_r = in.obj->gradient(in.w_r);
  return in;
}

or_::DenseApprox dense_of(ApproxFamily fam, const Instance& in, std::size_t p) {
  return or_::DenseApprox(fam, *in.data, in.obj->loss(), in.obj->lambda(), in.shards[p], in.shards.size(),
                          or_::to_eigen(in.w_r), or_::to_eigen(in.g_r));
}

double lipschitz_hat(const Objective& obj, const ApproxSpec& spec) {
  return std::max(obj.estimate_lipschitz(100), spec.estimate_lipschitz(100));
}

// ---------------------------------------------------------------- 1
Outcome gradient_consistency() {
  Rng rng(101);
  double worst = 0.0;
  int cases = 0;
  for (int k = 0; k < 50; ++k) {
    Instance in = random_instance(rng, 120, 15, kLosses[k % 3], 0.05 + rng.uniform());
    for (ApproxFamily fam : kFamilies)
      for (std::size_t p = 0; p < in.shards.size(); ++p) {
        const ApproxSpec spec = build_approx(fam, *in.obj, in.shards[p], in.w_r, in.g_r, in.shards.size(), p);
        const Vec diff = sub(spec.gradient(in.w_r), in.g_r);
        worst = std::max(worst, norm2(diff) / (1.0 + norm2(in.g_r)));
        ++cases;
      }
  }
  std::ostringstream os;
  os << cases << " (instance, family, node) cases; max ||grad f_hat_p(w_r) - g_r||/(1+||g_r||) = " << worst;
  return {worst <= 1e-10, os.str()};
}

// ---------------------------------------------------------------- 2
Outcome angle_exact_minimizers() {
  Rng rng(202);
  double worst = std::numeric_limits<double>::infinity();
  int cases = 0;
  for (int k = 0; k < 25; ++k) {
    Instance in = random_instance(rng, 200, 20, kLosses[k % 3], 0.02 + rng.uniform());
    for (ApproxFamily fam : kFamilies)
      for (std::size_t p = 0; p < in.shards.size(); ++p) {
        const ApproxSpec spec = build_approx(fam, *in.obj, in.shards[p], in.w_r, in.g_r, in.shards.size(), p);
        const auto dense = dense_of(fam, in, p);
        const auto w_star = or_::newton_minimize(dense, dense.wr);
        const double c = or_::cosine(-dense.gr, w_star - dense.wr);
        worst = std::min(worst, c - in.obj->lambda() / lipschitz_hat(*in.obj, spec));
        ++cases;
      }
  }
  std::ostringstream os;
  os << cases << " exact minimizers; min [cos angle(-g_r, w* - w_r) - lambda/L_hat] = " << worst;
  return {worst >= -1e-8, os.str()};
}

// ---------------------------------------------------------------- 3
// lambda chosen so that lambda / L_hat is well inside (0, 1) and theta has room.
double lambda_for_ratio(const Dataset& data, LossKind loss, const std::vector<Shard>& shards, double ratio) {
  Objective probe(data, loss, 1.0);
  double spectral = probe.estimate_lipschitz(100) - 1.0;
  for (const auto& s : shards)
    spectral = std::max(spectral, static_cast<double>(shards.size()) * (probe.estimate_lipschitz(100, s) - 1.0));
  return ratio / (1.0 - ratio) * spectral;
}

Outcome khat_sufficiency() {
  constexpr double zeta = 0.9;
  Rng rng(303);
  const int trials = 100;
  int passed = 0, explained = 0;
  std::ostringstream log;
  for (int k = 0; k < trials; ++k) {
    const LossKind loss = kLosses[k % 3];
    const ApproxFamily fam = kFamilies[(k / 3) % 4];
    Instance in = random_instance(rng, 150, 15, loss, 1.0);
    const double lambda = lambda_for_ratio(*in.data, loss, in.shards, 0.55 + 0.3 * rng.uniform());
    in.obj = std::make_unique<Objective>(*in.data, loss, lambda);
    in.g_r = in.obj->gradient(in.w_r);
    const std::size_t p = rng.below(in.shards.size());
    const ApproxSpec spec = build_approx(fam, *in.obj, in.shards[p], in.w_r, in.g_r, in.shards.size(), p);
    const double L = lipschitz_hat(*in.obj, spec);
    const double theta_lo = std::acos(lambda / L);
    const double theta = theta_lo + (0.5 + 0.4 * rng.uniform()) * (std::numbers::pi / 2 - theta_lo);

    // delta_hat: worst per-iteration contraction of the inner gap on a probe run
    const auto dense = dense_of(fam, in, p);
    const auto w_star = or_::newton_minimize(dense, dense.wr);
    const double gap0 = dense.value(dense.wr) - dense.value(w_star);
    auto contraction = [&](const std::vector<double>& trace) {
      double d = 0.0;
      for (std::size_t j = 0; j + 1 < trace.size(); ++j) {
        const double a = gap0 + trace[j], b = gap0 + trace[j + 1];
        if (a <= 1e-10 * gap0) break;
        d = std::max(d, std::max(b, 0.0) / a);
      }
      return d;
    };
    InnerOptimizerConfig cfg;
    cfg.khat = 8;
    const double delta = std::clamp(contraction(minimize_inner(spec, cfg).trace), 1e-12, 1.0 - 1e-12);
    cfg.khat = static_cast<int>(khat_bound(lambda, L, zeta, delta));
    const InnerResult res = minimize_inner(spec, cfg);
    const Vec d = sub(res.w_p, in.w_r);
    if (norm2(d) > 0.0 && angle_check(in.g_r, d, theta)) {
      ++passed;
      continue;
    }
    // failure: was delta_hat too optimistic for the iterations actually run?
    const double observed = contraction(res.trace);
    const bool misestimated = observed > delta;
    explained += misestimated;
    log << " [trial " << k << ": delta_hat=" << delta << " observed=" << observed << " khat=" << cfg.khat
        << (misestimated ? " delta mis-estimated]" : " UNEXPLAINED]");
  }
  std::ostringstream os;
  os << passed << "/" << trials << " trials pass angle_check after khat_bound(lambda, L_hat, 0.9, delta_hat) TRON steps"
     << log.str();
  return {passed >= 95 && explained == trials - passed, os.str()};
}

// ---------------------------------------------------------------- 4
Outcome glrc_envelope() {
  const Dataset data = synth_classification(2000, 100, 0.1, 0.9, 404);
  const double lambda = 1e-2;
  Objective obj(data, LossKind::Logistic, lambda);
  const double f_star = reference_optimum(obj, 1e-12);
  const double L = obj.estimate_lipschitz(200);
  const std::size_t P = 8;
  auto shards = canonical_shards(partition(data.n(), P, 4, PartitionScheme::ShuffledRoundRobin).shards());
  SequentialChannel comm(obj, shards);
  RunConfig cfg;
  cfg.nodes = P;
  cfg.eps_g = 1e-12;
  cfg.max_outer = 150;
  cfg.f_star = f_star;
  cfg.target_gap = 1e-6;
  const RunResult res = run_fadl(cfg, comm);
  double worst = -1.0;
  int checked = 0;
  for (std::size_t r = 0; r + 1 < res.metrics.size(); ++r) {
    const double a = res.metrics[r].f - f_star, b = res.metrics[r + 1].f - f_star;
    const double bound = theorem2_rate(1e-4, 0.9, lambda, L, res.metrics[r + 1].cos_angle);
    worst = std::max(worst, b / a - bound);
    ++checked;
  }
  const auto& last = res.metrics.back();
  const bool reached = last.rel_gap && *last.rel_gap <= 1e-6;
  std::ostringstream os;
  os << "P=" << P << ", " << last.r << " outer iterations, final gap " << *last.rel_gap << ", " << checked
     << " ratios, max(ratio - rate bound) = " << worst;
  return {reached && last.r <= 150 && worst <= 0.0, os.str()};
}

// ---------------------------------------------------------------- 5
Outcome linesearch_interval() {
  // f(w) = w^2/2 from w = 1 along d = -1, alpha = 1e-4, beta = 0.9
  const RayFunction phi = [](double t) { return PhiValue{0.5 * (1.0 - t) * (1.0 - t), t - 1.0}; };
  const PhiValue at0 = phi(0.0);
  double first = -1.0, last = -1.0;
  int runs = 0;
  bool prev = false;
  for (int k = 0; k <= 30000; ++k) {
    const double t = k * 1e-4;
    const bool ok = armijo_wolfe_accepts(at0, t, phi(t), 1e-4, 0.9);
    if (ok && !prev) ++runs;
    if (ok) {
      if (first < 0.0) first = t;
      last = t;
    }
    prev = ok;
  }
  std::ostringstream os;
  os << "accept set [" << first << ", " << last << "] in " << runs << " interval(s)";
  return {runs == 1 && std::abs(first - 0.1) <= 1e-3 && std::abs(last - 1.9998) <= 1e-3, os.str()};
}

// ---------------------------------------------------------------- 6
Outcome svrg_identity() {
  Rng rng(606);
  bool bitwise = true;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const LossKind loss = kLosses[k % 3];
    Instance in = random_instance(rng, 100, 15, loss, 0.05 + rng.uniform());
    const std::size_t p = rng.below(in.shards.size());
    const Shard& shard = in.shards[p];
    const ApproxSpec spec = build_approx(ApproxFamily::Linear, *in.obj, shard, in.w_r, in.g_r, in.shards.size(), p);
    Vec w = in.w_r;
    for (auto& v : w) v += 0.3 * rng.normal();
    const double eta = 0.02 * rng.uniform();
    const std::size_t i = shard[rng.below(shard.size())];
    const double np = static_cast<double>(shard.size());
    const double lam = in.obj->lambda();
    const auto& x = in.data->x(i);
    const double cw = np * loss_derivatives(loss, x.dot(w), in.data->y(i)).first;
    const double cr = np * loss_derivatives(loss, x.dot(in.w_r), in.data->y(i)).first;
    Vec gw(w.size()), gr(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) gw[j] = lam * w[j], gr[j] = lam * in.w_r[j];
    for (const auto& e : x.entries()) gw[e.index] += cw * e.value, gr[e.index] += cr * e.value;
    Vec expect(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) expect[j] = w[j] - eta * (gw[j] - gr[j] + in.g_r[j]);
    bitwise = bitwise && svrg_step(spec, w, i, eta) == expect;

    Vec avg(w.size(), 0.0);
    for (std::size_t ex : shard) axpy(1.0 / np, svrg_gradient_sample(spec, w, ex), avg);
    const Vec g = spec.gradient(w);
    worst = std::max(worst, norm2(sub(avg, g)) / (1.0 + norm2(g)));
  }
  std::ostringstream os;
  os << "SGD step bit-identical: " << (bitwise ? "yes" : "no") << "; max shard-average error " << worst;
  return {bitwise && worst <= 1e-12, os.str()};
}

// ---------------------------------------------------------------- 7
Outcome fadl_is_newton() {
  const Dataset data = synth_classification(300, 20, 0.5, 0.97, 707);
  const double lambda = 1e-3;
  Objective obj(data, LossKind::Logistic, lambda);
  const or_::DenseObjective dense(data, LossKind::Logistic, lambda);
  SequentialChannel comm(obj, {data.all_indices()});
  RunConfig cfg;
  cfg.family = ApproxFamily::Quadratic;
  cfg.eps_g = 1e-14;
  cfg.max_outer = 5;
  cfg.inner.khat = 50;
  cfg.inner.cg_tol = 1e-14;
  cfg.inner.cg_max = 200;
  const RunResult res = run_fadl(cfg, comm);

  // Same 5 iterates from a standalone Newton + exact line search on the dense problem
  Eigen::VectorXd w = Eigen::VectorXd::Zero(20);
  std::vector<Eigen::VectorXd> iterates;
  for (int r = 0; r < 5; ++r) {
    const Eigen::VectorXd d = dense.hessian(w).ldlt().solve(-dense.gradient(w));
    w += or_::exact_line_minimizer(dense, w, d) * d;
    iterates.push_back(w);
  }
  // The engine records f per iterate; compare its final iterate and the f trace.
  double worst_f = 0.0;
  for (int r = 0; r < 5 && r + 1 < static_cast<int>(res.metrics.size()); ++r)
    worst_f = std::max(worst_f, std::abs(res.metrics[r + 1].f - dense.value(iterates[r])) /
                                    std::max(1.0, std::abs(dense.value(iterates[r]))));
  // iterate-by-iterate: rerun with max_outer = r to recover w_r
  double worst_w = 0.0;
  for (int r = 1; r <= 5; ++r) {
    RunConfig c = cfg;
    c.max_outer = r;
    const RunResult rr = run_fadl(c, comm);
    worst_w = std::max(worst_w, (or_::to_eigen(rr.w) - iterates[r - 1]).norm() / std::max(1.0, iterates[r - 1].norm()));
  }
  const bool enough = res.metrics.size() >= 6;
  std::ostringstream os;
  os << "first 5 iterates vs Newton with exact line search: max relative ||w diff|| = " << worst_w
     << ", max relative f diff = " << worst_f << ", final gradient norm " << res.metrics.back().grad_norm
     << (enough ? "" : " (run stopped early)");
  return {worst_w <= 1e-8 && enough, os.str()};
}

// ---------------------------------------------------------------- 8 / 11 shared instance
struct HighDim {
  Dataset data = synth_classification(5000, 50000, 0.001, 0.9, 7);
  Objective obj{data, LossKind::SquaredHinge, 1e-4};
  std::vector<Shard> shards = canonical_shards(partition(5000, 8, 1, PartitionScheme::ShuffledRoundRobin).shards());
};

RunConfig highdim_config(Method method, double f_star) {
  RunConfig cfg;
  cfg.method = method;
  cfg.family = ApproxFamily::Quadratic;
  cfg.nodes = 8;
  cfg.inner.khat = 10;
  cfg.eps_g = 1e-12;  // matched for both methods; the gap target ends the runs
  cfg.f_star = f_star;
  cfg.target_gap = 1e-4;
  return cfg;
}

// Passes at the first row with gap <= target, if any.
std::optional<std::uint64_t> passes_to_gap(const RunMetrics& m, double target) {
  for (const auto& row : m)
    if (row.rel_gap && *row.rel_gap <= target) return row.comm_passes;
  return std::nullopt;
}

double gap_at_passes(const RunMetrics& m, std::uint64_t passes) {
  double g = std::numeric_limits<double>::infinity();
  for (const auto& row : m)
    if (row.comm_passes <= passes && row.rel_gap) g = *row.rel_gap;
  return g;
}

Outcome pass_reduction() {
  const HighDim hd;
  const double f_star = reference_optimum(hd.obj, 1e-12);
  // The 5 minute budget caps both runs: FADL first, then SQM up to the passes FADL used.
  SequentialChannel c1(hd.obj, hd.shards);
  RunConfig fc = highdim_config(Method::FADL, f_star);
  fc.max_outer = 900;
  const RunResult fadl = run(fc, c1);
  const std::uint64_t fadl_budget = fadl.metrics.back().comm_passes;

  SequentialChannel c2(hd.obj, hd.shards);
  RunConfig sc = highdim_config(Method::SQM, f_star);
  sc.max_outer = static_cast<int>(fadl_budget);
  RunResult sqm = run(sc, c2);
  RunMetrics sqm_rows;
  for (const auto& row : sqm.metrics)
    if (row.comm_passes <= fadl_budget) sqm_rows.push_back(row);

  const auto pf = passes_to_gap(fadl.metrics, 1e-4);
  const auto ps = passes_to_gap(sqm_rows, 1e-4);
  std::ostringstream os;
  os << std::setprecision(4) << "f*=" << f_star << "; ";
  os << "FADL-Quadratic P=8 khat=10: " << (pf ? "gap 1e-4 after " + std::to_string(*pf) + " passes"
                                                : "gap 1e-4 not reached; gap " +
                                                      std::to_string(*fadl.metrics.back().rel_gap) + " after " +
                                                      std::to_string(fadl_budget) + " passes");
  os << "; SQM: " << (ps ? "gap 1e-4 after " + std::to_string(*ps) + " passes"
                         : "gap " + std::to_string(gap_at_passes(sqm_rows, fadl_budget)) + " after " +
                               std::to_string(fadl_budget) + " passes");
  bool ok = false;
  if (pf && ps) {
    os << "; pass ratio SQM/FADL = " << static_cast<double>(*ps) / static_cast<double>(*pf);
    ok = *pf < *ps;
  } else if (pf) {
    os << "; SQM needs more than " << fadl_budget << " passes, ratio > "
       << static_cast<double>(fadl_budget) / static_cast<double>(*pf);
    ok = true;
  }
  return {ok, os.str()};
}

// ---------------------------------------------------------------- 9
Outcome cost_model() {
  struct Row {
    const char* name;
    double nz, m;
  };
  const Row rows[] = {{"kdd2010", 0.31e9, 20.21e6},
                      {"url", 0.22e9, 3.23e6},
                      {"webspam", 0.98e9, 16.6e6},
                      {"mnist8m", 6.35e9, 784},
                      {"rcv", 0.50e8, 47236}};
  const double threshold = 100.0 * 8.0 / (2.0 * 10.0);
  bool all = true;
  std::ostringstream os;
  os << "threshold gamma P/(2 khat) = " << threshold << ";";
  for (const auto& r : rows) {
    const bool truth = r.nz / r.m < threshold;
    const bool got = fadl_faster_predicate(r.nz, r.m, 100.0, 8.0, 10.0);
    all = all && got == truth;
    os << " " << r.name << " nz/m=" << std::setprecision(3) << r.nz / r.m << " -> " << (got ? "true" : "false");
  }
  os << " (url and webspam exceed the threshold, so the arithmetic gives false for them)";
  return {all, os.str()};
}

// ---------------------------------------------------------------- 10
Outcome determinism() {
  const Dataset data = synth_classification(600, 300, 0.05, 0.9, 1010);
  bool same = true, monotone = true;
  std::ostringstream os;
  for (LossKind loss : kLosses)
    for (Method method : {Method::FADL, Method::SQM})
      for (ApproxFamily fam : kFamilies) {
        if (method == Method::SQM && fam != ApproxFamily::Quadratic) continue;
        Objective obj(data, loss, 1e-2);
        auto shards = canonical_shards(partition(data.n(), 4, 10, PartitionScheme::ShuffledRoundRobin).shards());
        RunConfig cfg;
        cfg.method = method;
        cfg.family = fam;
        cfg.nodes = 4;
        cfg.eps_g = 1e-8;
        cfg.max_outer = 40;
        SequentialChannel a(obj, shards), b(obj, shards);
        const RunResult ra = run(cfg, a), rb = run(cfg, b);
        same = same && same_trajectory(ra.metrics, rb.metrics) && ra.w == rb.w;
        for (std::size_t r = 1; r < ra.metrics.size(); ++r) monotone = monotone && ra.metrics[r].f < ra.metrics[r - 1].f;
      }
  os << "13 configurations x 2 runs: bit-identical " << (same ? "yes" : "no") << ", f strictly decreasing "
     << (monotone ? "yes" : "no");
  return {same && monotone, os.str()};
}

// ---------------------------------------------------------------- 11
Outcome backend_equivalence() {
  const HighDim hd;
  bool same = true;
  std::ostringstream os;
  for (Method method : {Method::FADL, Method::SQM}) {
    RunConfig cfg = highdim_config(method, 0.0056);
    cfg.f_star.reset();
    cfg.target_gap.reset();
    cfg.max_outer = method == Method::FADL ? 25 : 100;
    SequentialChannel seq(hd.obj, hd.shards);
    ThreadedChannel thr(hd.obj, hd.shards, 4);
    const RunResult a = run(cfg, seq), b = run(cfg, thr);
    const bool eq = a.w == b.w && same_trajectory(a.metrics, b.metrics) &&
                    a.ledger.vector_reductions == b.ledger.vector_reductions;
    same = same && eq;
    os << to_string(method) << " " << cfg.max_outer << " iterations " << (eq ? "identical" : "DIFFER") << "; ";
  }
  os << "threaded backend with 4 workers";
  return {same, os.str()};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "gradient consistency", gradient_consistency},
      {2, "angle bound of exact local minimizers", angle_exact_minimizers},
      {3, "khat sufficiency", khat_sufficiency},
      {4, "linear rate envelope", glrc_envelope},
      {5, "Armijo-Wolfe interval", linesearch_interval},
      {6, "SVRG identity", svrg_identity},
      {7, "P=1 quadratic FADL is damped Newton", fadl_is_newton},
      {8, "communication-pass reduction", pass_reduction},
      {9, "cost model predicate", cost_model},
      {10, "determinism and monotonicity", determinism},
      {11, "backend equivalence", backend_equivalence},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !out.passed;
    std::cout << (out.passed ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << ") [" << std::fixed
              << std::setprecision(2) << secs << "s] " << std::defaultfloat << out.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
