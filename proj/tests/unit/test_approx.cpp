#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fadl/approx.hpp"
#include "fadl/data_io.hpp"
#include "fadl/errors.hpp"
#include "fadl/oracle.hpp"
#include "fadl/rng.hpp"

using namespace fadl;

namespace {

constexpr ApproxFamily kFamilies[] = {ApproxFamily::Linear, ApproxFamily::Hybrid, ApproxFamily::Quadratic,
                                      ApproxFamily::Nonlinear};

struct Fixture {
  Dataset data = synth_classification(150, 10, 0.5, 0.9, 21);
  std::vector<Shard> shards = partition(150, 3, 4, PartitionScheme::ShuffledRoundRobin).shards();
  Vec w_r = Vec(10, 0.0);
  Fixture() {
    Rng rng(5);
    for (auto& v : w_r) v = 0.4 * rng.normal();
  }
};

Vec perturb(const Vec& w, std::uint64_t seed) {
  Rng rng(seed);
  Vec out = w;
  for (auto& v : out) v += 0.3 * rng.normal();
  return out;
}

}  // namespace

TEST_CASE("every family matches its dense formula") {
  Fixture fx;
  for (LossKind loss : {LossKind::LeastSquares, LossKind::Logistic, LossKind::SquaredHinge}) {
    const Objective obj(fx.data, loss, 0.2);
    const Vec g_r = obj.gradient(fx.w_r);
    for (ApproxFamily fam : kFamilies) {
      CAPTURE(to_string(fam));
      const ApproxSpec spec = build_approx(fam, obj, fx.shards[1], fx.w_r, g_r, 3, 1);
      const oracle::DenseApprox dense(fam, fx.data, loss, 0.2, fx.shards[1], 3, oracle::to_eigen(fx.w_r),
                                      oracle::to_eigen(g_r));
      const Vec a = perturb(fx.w_r, 1), b = perturb(fx.w_r, 2);
      // constants are dropped, so compare differences
      const double got = spec.value(a) - spec.value(b);
      const double want = dense.value(oracle::to_eigen(a)) - dense.value(oracle::to_eigen(b));
      CHECK(got == doctest::Approx(want).epsilon(1e-10));
      CHECK((oracle::to_eigen(spec.gradient(a)) - dense.gradient(oracle::to_eigen(a))).norm() <= 1e-10);
      const Vec v = perturb(Vec(10, 0.0), 3);
      const auto hv = oracle::to_eigen(spec.hessian_vector(a, v));
      const oracle::VectorXd want_hv = dense.hessian(oracle::to_eigen(a)) * oracle::to_eigen(v);
      CHECK((hv - want_hv).norm() <= 1e-10 * (1.0 + want_hv.norm()));
    }
  }
}

TEST_CASE("gradient consistency at the anchor") {
  Fixture fx;
  const Objective obj(fx.data, LossKind::Logistic, 0.05);
  const Vec g_r = obj.gradient(fx.w_r);
  for (ApproxFamily fam : kFamilies)
    for (std::size_t p = 0; p < 3; ++p) {
      const ApproxSpec spec = build_approx(fam, obj, fx.shards[p], fx.w_r, g_r, 3, p);
      CHECK(norm2(sub(spec.gradient(fx.w_r), g_r)) <= 1e-12 * (1.0 + norm2(g_r)));
    }
}

TEST_CASE("value_change equals the value difference") {
  Fixture fx;
  const Objective obj(fx.data, LossKind::SquaredHinge, 0.1);
  const Vec g_r = obj.gradient(fx.w_r);
  for (ApproxFamily fam : kFamilies) {
    const ApproxSpec spec = build_approx(fam, obj, fx.shards[0], fx.w_r, g_r, 3, 0);
    const Vec a = perturb(fx.w_r, 7);
    const Vec step = sub(perturb(fx.w_r, 8), fx.w_r);
    const double want = spec.value(add(a, step)) - spec.value(a);
    CHECK(spec.value_change(spec.evaluate(a), step) == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("approximation is lambda-strongly convex along random directions") {
  Fixture fx;
  const Objective obj(fx.data, LossKind::Logistic, 0.3);
  const Vec g_r = obj.gradient(fx.w_r);
  for (ApproxFamily fam : kFamilies) {
    const ApproxSpec spec = build_approx(fam, obj, fx.shards[2], fx.w_r, g_r, 3, 2);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Vec v = sub(perturb(fx.w_r, 100 + s), fx.w_r);
      CHECK(dot(v, spec.hessian_vector(perturb(fx.w_r, s), v)) >= 0.3 * norm2_sq(v) * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("Lipschitz estimate of the approximation bounds its Hessian") {
  Fixture fx;
  const Objective obj(fx.data, LossKind::LeastSquares, 0.1);
  const Vec g_r = obj.gradient(fx.w_r);
  for (ApproxFamily fam : kFamilies) {
    const ApproxSpec spec = build_approx(fam, obj, fx.shards[0], fx.w_r, g_r, 3, 0);
    const oracle::DenseApprox dense(fam, fx.data, LossKind::LeastSquares, 0.1, fx.shards[0], 3,
                                    oracle::to_eigen(fx.w_r), oracle::to_eigen(g_r));
    Eigen::SelfAdjointEigenSolver<oracle::MatrixXd> es(dense.hessian(dense.wr));
    CHECK(spec.estimate_lipschitz(100) >= es.eigenvalues().maxCoeff());
  }
}

TEST_CASE("build_approx rejects bad input") {
  Fixture fx;
  const Objective obj(fx.data, LossKind::Logistic, 0.1);
  const Vec g_r = obj.gradient(fx.w_r);
  CHECK_THROWS_AS(build_approx(ApproxFamily::Linear, obj, {}, fx.w_r, g_r, 3, 0), DegenerateShardError);
  CHECK_THROWS_AS(build_approx(ApproxFamily::Linear, obj, fx.shards[0], fx.w_r, Vec(3, 0.0), 3, 0), InputError);
  CHECK_THROWS_AS(build_approx(ApproxFamily::Linear, obj, fx.shards[0], fx.w_r, g_r, 0, 0), InputError);
  for (ApproxFamily fam : kFamilies) CHECK(parse_family(to_string(fam)) == fam);
  CHECK_THROWS_AS(parse_family("bfgs"), InputError);
}
