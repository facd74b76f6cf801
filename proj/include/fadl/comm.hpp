#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "fadl/cost_model.hpp"
#include "fadl/dataset.hpp"
#include "fadl/objective.hpp"
#include "fadl/vector_ops.hpp"

namespace fadl {

/// Everything one node keeps between supersteps. Owned by exactly one executor.
struct NodeState {
  std::size_t node_id = 0;
  Shard shard;
  std::vector<double> margins_z;  // w_r.x_i
  std::vector<double> margins_e;  // d_r.x_i
  Vec local_grad_L;               // grad L_p(w_r)
  std::vector<double> curvature;  // l''(z_i) at w_r
  std::vector<double> trial_margins;
};

/// A node's answer to one superstep.
struct NodeReply {
  Vec vector;
  std::vector<double> scalars;
  int flag = 0;
};

using NodeTask = std::function<NodeReply(NodeState&)>;

enum class Backend { Sequential, Threaded };

std::string_view to_string(Backend backend);
Backend parse_backend(std::string_view name);

/// Bulk-synchronous master/worker channel.
///
/// exchange() delivers one task (the broadcast payload is captured by value) to
/// every node and returns the replies in node-id order; the reduce helpers then
/// combine them on the coordinator in that fixed order, so every backend yields
/// bit-identical sums. The ledger counts every reduction and broadcast.
class CommChannel {
 public:
  virtual ~CommChannel() = default;
  CommChannel(const CommChannel&) = delete;
  CommChannel& operator=(const CommChannel&) = delete;

  std::size_t node_count() const { return node_count_; }
  const Objective& objective() const { return *objective_; }

  virtual std::vector<NodeReply> exchange(const NodeTask& task) = 0;

  /// sum_p reply_p.vector (one m-vector reduction).
  Vec reduce_vectors(const std::vector<NodeReply>& replies);
  /// sum_p weight_p reply_p.vector (one m-vector reduction).
  Vec reduce_vectors(const std::vector<NodeReply>& replies, std::span<const double> weights);
  /// Element-wise sums of reply_p.scalars (one scalar reduction).
  std::vector<double> reduce_scalars(const std::vector<NodeReply>& replies);

  void count_broadcast_vector(std::uint64_t k = 1) { ledger_.broadcast_vectors += k; }
  void count_broadcast_scalar(std::uint64_t k = 1) { ledger_.broadcast_scalars += k; }

  const CommLedger& ledger() const { return ledger_; }
  void reset_ledger();

 protected:
  CommChannel(const Objective& objective, std::size_t node_count);

 private:
  const Objective* objective_;
  std::size_t node_count_;
  CommLedger ledger_;
};

/// All nodes stepped in id order on the calling thread.
class SequentialChannel final : public CommChannel {
 public:
  SequentialChannel(const Objective& objective, const std::vector<Shard>& shards);
  std::vector<NodeReply> exchange(const NodeTask& task) override;

 private:
  std::vector<NodeState> nodes_;
};

/// One worker thread per group of nodes (node p lives on worker p mod W). The
/// coordinator posts tasks to worker mailboxes and waits for all replies.
class ThreadedChannel final : public CommChannel {
 public:
  ThreadedChannel(const Objective& objective, const std::vector<Shard>& shards, std::size_t workers);
  ~ThreadedChannel() override;
  std::vector<NodeReply> exchange(const NodeTask& task) override;

  std::size_t worker_count() const;

 private:
  struct Worker;
  std::vector<std::unique_ptr<Worker>> workers_;
};

/// Worker count for the threaded backend: $FADL_THREADS if set and positive,
/// else the hardware concurrency, capped at the node count.
std::size_t default_worker_count(std::size_t node_count);

std::unique_ptr<CommChannel> make_channel(Backend backend, const Objective& objective,
                                          const std::vector<Shard>& shards, std::size_t workers = 0);

}  // namespace fadl
