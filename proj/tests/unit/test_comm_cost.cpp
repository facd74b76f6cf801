#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>

#include "fadl/comm.hpp"
#include "fadl/cost_model.hpp"
#include "fadl/data_io.hpp"
#include "fadl/errors.hpp"

using namespace fadl;

TEST_CASE("total cost formula") {
  CostParams p;
  p.c1 = 2;
  p.c2 = 7;
  p.c3 = 1;
  p.nz = 1000;
  p.m = 10;
  p.nodes = 4;
  p.t_inner = 3;
  p.t_outer = 5;
  p.gamma = 100;
  CHECK(total_cost(p) == doctest::Approx(((2.0 * 1000 / 4 + 7.0 * 10) * 3 + 100.0 * 10) * 5));
  CHECK(communication_cost(p) == doctest::Approx(100.0 * 10 * 5));
  p.nodes = 0.5;
  CHECK_THROWS_AS(p.validate(), InputError);
}

TEST_CASE("profiles") {
  const CostParams s = sqm_profile(1e6, 1e3, 8, 100, 20);
  CHECK(s.t_inner == 1.0);
  CHECK(s.t_outer == 20.0);
  const CostParams f = fadl_profile(1e6, 1e3, 8, 100, 10, 5);
  CHECK(f.t_inner == 10.0);
  CHECK(f.t_outer == 5.0);
}

TEST_CASE("fadl_faster_predicate boundary") {
  // threshold gamma P / (2 khat) = 40
  CHECK(fadl_faster_predicate(39.0, 1.0, 100, 8, 10));
  CHECK_FALSE(fadl_faster_predicate(40.0, 1.0, 100, 8, 10));
  CHECK_FALSE(fadl_faster_predicate(41.0, 1.0, 100, 8, 10));
}

TEST_CASE("consistency check agrees far from the boundary") {
  const auto far_true = consistency_check(1.0, 1.0, 100, 8, 10, 4.0);
  CHECK(far_true.predicate);
  CHECK(far_true.agrees);
  CHECK(far_true.status == ConsistencyStatus::Consistent);
  const auto low_ratio = consistency_check(1.0, 1.0, 100, 8, 10, 2.0);
  CHECK(low_ratio.status == ConsistencyStatus::Indeterminate);
}

namespace {

struct Tiny {
  Dataset data = synth_classification(40, 6, 0.5, 0.9, 1);
  Objective obj{data, LossKind::Logistic, 1.0};
  std::vector<Shard> shards = partition(40, 5, 2, PartitionScheme::ShuffledRoundRobin).shards();
};

NodeReply id_reply(NodeState& s) {
  NodeReply r;
  r.vector = Vec(3, static_cast<double>(s.node_id) + 0.1);
  r.scalars = {static_cast<double>(s.shard.size()), 1.0};
  return r;
}

}  // namespace

TEST_CASE("channels reply in node order and count reductions") {
  Tiny t;
  for (Backend b : {Backend::Sequential, Backend::Threaded}) {
    auto ch = make_channel(b, t.obj, t.shards, 3);
    const auto replies = ch->exchange(id_reply);
    REQUIRE(replies.size() == 5);
    for (std::size_t p = 0; p < 5; ++p) CHECK(replies[p].vector[0] == static_cast<double>(p) + 0.1);
    const Vec sum = ch->reduce_vectors(replies);
    CHECK(sum[2] == doctest::Approx(10.5));
    const auto sc = ch->reduce_scalars(replies);
    CHECK(sc[0] == 40.0);
    CHECK(sc[1] == 5.0);
    const std::vector<double> w(5, 0.2);
    CHECK(ch->reduce_vectors(replies, w)[0] == doctest::Approx(2.1));
    ch->count_broadcast_vector();
    CHECK(ch->ledger().vector_reductions == 2);
    CHECK(ch->ledger().scalar_reductions == 1);
    CHECK(ch->ledger().broadcast_vectors == 1);
    CHECK(ch->ledger().bytes_modeled() == 8 * 6 * 3);
    ch->reset_ledger();
    CHECK(ch->ledger().vector_reductions == 0);
  }
}

TEST_CASE("node state persists across supersteps") {
  Tiny t;
  ThreadedChannel ch(t.obj, t.shards, 2);
  CHECK(ch.worker_count() == 2);
  ch.exchange([](NodeState& s) {
    s.margins_z.assign(1, static_cast<double>(s.node_id) * 2.0);
    return NodeReply{};
  });
  const auto replies = ch.exchange([](NodeState& s) {
    NodeReply r;
    r.scalars = {s.margins_z.at(0)};
    return r;
  });
  for (std::size_t p = 0; p < 5; ++p) CHECK(replies[p].scalars[0] == 2.0 * static_cast<double>(p));
}

TEST_CASE("node exceptions reach the coordinator") {
  Tiny t;
  for (Backend b : {Backend::Sequential, Backend::Threaded}) {
    auto ch = make_channel(b, t.obj, t.shards, 2);
    CHECK_THROWS_AS(ch->exchange([](NodeState& s) -> NodeReply {
      if (s.node_id == 3) throw DegenerateShardError("boom");
      return {};
    }),
                    DegenerateShardError);
    // channel still usable afterwards
    CHECK(ch->exchange(id_reply).size() == 5);
  }
}

TEST_CASE("worker count and backend names") {
  CHECK(default_worker_count(1) == 1);
  setenv("FADL_THREADS", "3", 1);
  CHECK(default_worker_count(8) == 3);
  CHECK(default_worker_count(2) == 2);
  unsetenv("FADL_THREADS");
  CHECK(parse_backend("threaded") == Backend::Threaded);
  CHECK_THROWS_AS(parse_backend("mpi"), InputError);
}
