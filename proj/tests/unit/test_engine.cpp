#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fadl/data_io.hpp"
#include "fadl/engine.hpp"
#include "fadl/errors.hpp"
#include "fadl/oracle.hpp"

using namespace fadl;

namespace {

struct Problem {
  Dataset data;
  Objective obj;
  std::vector<Shard> shards;
  double f_star;
  Problem(LossKind loss, std::size_t P, double lambda = 1e-2)
      : data(synth_classification(400, 30, 0.3, 0.9, 77)),
        obj(data, loss, lambda),
        shards(canonical_shards(partition(400, P, 9, PartitionScheme::ShuffledRoundRobin).shards())) {
    const oracle::DenseObjective dense(data, loss, lambda);
    f_star = dense.value(oracle::newton_minimize(dense, oracle::VectorXd::Zero(30)));
  }
};

RunConfig config(Method method, ApproxFamily fam, std::size_t P) {
  RunConfig c;
  c.method = method;
  c.family = fam;
  c.nodes = P;
  c.eps_g = 1e-6;
  c.max_outer = 300;
  return c;
}

}  // namespace

TEST_CASE("FADL converges for every family and loss") {
  for (LossKind loss : {LossKind::LeastSquares, LossKind::Logistic, LossKind::SquaredHinge}) {
    Problem pr(loss, 4);
    for (ApproxFamily fam : {ApproxFamily::Linear, ApproxFamily::Hybrid, ApproxFamily::Quadratic, ApproxFamily::Nonlinear}) {
      CAPTURE(to_string(fam));
      SequentialChannel ch(pr.obj, pr.shards);
      const RunResult res = run_fadl(config(Method::FADL, fam, 4), ch);
      CAPTURE(to_string(loss));
      CAPTURE(res.metrics.size());
      CAPTURE(res.metrics.back().grad_norm / res.metrics.front().grad_norm);
      CHECK(res.stop == StopReason::GradientTolerance);
      CHECK((res.metrics.back().f - pr.f_star) / pr.f_star <= 1e-10);
    }
  }
}

TEST_CASE("FADL moves two vectors per outer iteration") {
  Problem pr(LossKind::Logistic, 3);
  SequentialChannel ch(pr.obj, pr.shards);
  const RunResult res = run_fadl(config(Method::FADL, ApproxFamily::Hybrid, 3), ch);
  const std::uint64_t R = res.metrics.back().r;
  CHECK(R >= 2);
  // one gradient reduction at w_0, then a direction and a gradient reduction per iteration
  CHECK(res.ledger.vector_reductions == 1 + 2 * R);
  for (const auto& row : res.metrics) CHECK(row.comm_passes == 1 + 2 * row.r);
  CHECK(res.metrics.back().probes >= R);
}

TEST_CASE("SQM converges and counts one reduction per Hessian-vector product") {
  Problem pr(LossKind::Logistic, 4);
  SequentialChannel ch(pr.obj, pr.shards);
  RunConfig c = config(Method::SQM, ApproxFamily::Quadratic, 4);
  const RunResult res = run_sqm(c, ch);
  CHECK(res.stop == StopReason::GradientTolerance);
  CHECK((res.metrics.back().f - pr.f_star) / pr.f_star <= 1e-10);
  const auto& last = res.metrics.back();
  // gradients: one at w_0 and one per accepted step; every CG step one more
  CHECK(last.comm_passes == 1 + last.r + last.inner_iters);
  CHECK(last.family == "-");
}

TEST_CASE("metrics rows are consistent") {
  Problem pr(LossKind::SquaredHinge, 2);
  SequentialChannel ch(pr.obj, pr.shards);
  RunConfig c = config(Method::FADL, ApproxFamily::Quadratic, 2);
  c.f_star = pr.f_star;
  c.run_id = "abc";
  const RunResult res = run(c, ch);
  for (std::size_t k = 0; k < res.metrics.size(); ++k) {
    const auto& row = res.metrics[k];
    CHECK(row.r == k);
    CHECK(row.run_id == "abc");
    CHECK(row.method == "fadl");
    CHECK(row.family == "quadratic");
    CHECK(row.nodes == 2);
    REQUIRE(row.rel_gap);
    CHECK(*row.rel_gap == doctest::Approx((row.f - pr.f_star) / pr.f_star));
    if (k > 0) {
      CHECK(row.f < res.metrics[k - 1].f);
      CHECK(row.cost_units > res.metrics[k - 1].cost_units);
      CHECK(row.step > 0.0);
      CHECK(row.cos_angle > 0.0);
    }
  }
  CHECK(std::abs(res.metrics.back().f - pr.obj.value(res.w)) <= 1e-12 * res.metrics.back().f);
}

TEST_CASE("stop reasons") {
  Problem pr(LossKind::Logistic, 2);
  SequentialChannel ch(pr.obj, pr.shards);
  RunConfig c = config(Method::FADL, ApproxFamily::Quadratic, 2);
  c.max_outer = 1;
  CHECK(run(c, ch).stop == StopReason::MaxOuter);
  c.max_outer = 0;
  CHECK(run(c, ch).metrics.size() == 1);
  c.max_outer = 100;
  c.f_star = pr.f_star;
  c.target_gap = 1e-3;
  const RunResult res = run(c, ch);
  CHECK(res.stop == StopReason::TargetGap);
  CHECK(*res.metrics.back().rel_gap <= 1e-3);
  CHECK(*res.metrics[res.metrics.size() - 2].rel_gap > 1e-3);
}

TEST_CASE("threaded runs equal sequential runs") {
  Problem pr(LossKind::SquaredHinge, 5);
  for (Method m : {Method::FADL, Method::SQM}) {
    SequentialChannel a(pr.obj, pr.shards);
    ThreadedChannel b(pr.obj, pr.shards, 3);
    const RunConfig c = config(m, ApproxFamily::Nonlinear, 5);
    const RunResult ra = run(c, a), rb = run(c, b);
    CHECK(ra.w == rb.w);
    CHECK(same_trajectory(ra.metrics, rb.metrics));
  }
}

TEST_CASE("warm start averages local SGD and is deterministic") {
  Problem pr(LossKind::Logistic, 4);
  SequentialChannel a(pr.obj, pr.shards), b(pr.obj, pr.shards);
  const Vec wa = warm_start_average(a, 3, 11), wb = warm_start_average(b, 3, 11);
  CHECK(wa == wb);
  CHECK(a.ledger().vector_reductions == 1);
  CHECK(pr.obj.value(wa) < pr.obj.value(Vec(30, 0.0)));
  RunConfig c = config(Method::FADL, ApproxFamily::Quadratic, 4);
  c.warm_start = WarmStart::LocalSgdAverage;
  c.warm_epochs = 3;
  c.seed = 11;
  SequentialChannel d(pr.obj, pr.shards);
  const RunResult res = run(c, d);
  CHECK(res.metrics.front().f < pr.obj.value(Vec(30, 0.0)));
  SequentialChannel e(pr.obj, pr.shards);
  CHECK(same_trajectory(run(c, e).metrics, res.metrics));
}

TEST_CASE("combine_directions and node_weights") {
  const Vec g = {1.0, 0.0};
  const std::vector<Vec> dirs = {{-1.0, 1.0}, {-1.0, -1.0}, {}};
  const std::vector<double> w = {0.5, 0.25, 0.25};
  const Vec d = combine_directions(dirs, w, g);
  CHECK(d[0] == doctest::Approx(-0.75));
  CHECK(d[1] == doctest::Approx(0.25));
  CHECK_THROWS_AS(combine_directions({{1.0, 0.0}}, std::vector<double>{1.0}, g), StagnationError);
  CHECK_THROWS_AS(combine_directions(dirs, std::vector<double>{0.5, 0.5, 0.5}, g), InputError);
  const auto u = node_weights(CombineWeights::Uniform, {10, 30});
  CHECK(u == std::vector<double>{0.5, 0.5});
  const auto p = node_weights(CombineWeights::Proportional, {10, 30});
  CHECK(p[0] == doctest::Approx(0.25));
  CHECK(p[1] == doctest::Approx(0.75));
}

TEST_CASE("angle condition is enforced when requested") {
  Problem pr(LossKind::Logistic, 4);
  SequentialChannel ch(pr.obj, pr.shards);
  RunConfig c = config(Method::FADL, ApproxFamily::Quadratic, 4);
  c.angle_theta = 1e-6;  // essentially only -g itself is allowed
  CHECK_THROWS_AS(run(c, ch), StagnationError);
}

TEST_CASE("canonical shards") {
  const auto s = canonical_shards({{5, 3}, {4, 0}, {2, 1}});
  CHECK(s == std::vector<Shard>{{0, 4}, {1, 2}, {3, 5}});
}

TEST_CASE("config validation and names") {
  RunConfig c;
  c.eps_g = 1.5;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.target_gap = 1e-3;
  CHECK_THROWS_AS(c.validate(), InputError);
  c = {};
  c.angle_theta = std::numbers::pi;
  CHECK_THROWS_AS(c.validate(), InputError);
  Problem pr(LossKind::Logistic, 2);
  SequentialChannel ch(pr.obj, pr.shards);
  c = {};
  c.nodes = 3;
  CHECK_THROWS_AS(run(c, ch), InputError);
  CHECK(parse_method("sqm") == Method::SQM);
  CHECK(parse_warm_start("sgd-average") == WarmStart::LocalSgdAverage);
  CHECK(parse_combine_weights("proportional") == CombineWeights::Proportional);
  CHECK(to_string(StopReason::TargetGap) == "target-gap");
  CHECK_THROWS_AS(parse_method("tera"), InputError);
}

TEST_CASE("reference optimum matches the dense Newton solution") {
  Problem pr(LossKind::SquaredHinge, 1, 1e-3);
  CHECK(reference_optimum(pr.obj) == doctest::Approx(pr.f_star).epsilon(1e-12));
}

TEST_CASE("same_trajectory ignores wall time only") {
  RunMetrics a(2), b(2);
  a[1].f = b[1].f = 1.0;
  b[1].elapsed_seconds = 5.0;
  CHECK(same_trajectory(a, b));
  b[1].comm_passes = 3;
  CHECK_FALSE(same_trajectory(a, b));
  CHECK_FALSE(same_trajectory(a, RunMetrics(1)));
}
