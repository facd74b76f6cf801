#include "fadl/comm.hpp"

#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "fadl/errors.hpp"

namespace fadl {

std::string_view to_string(Backend backend) {
  return backend == Backend::Sequential ? "sequential" : "threaded";
}

Backend parse_backend(std::string_view name) {
  if (name == "sequential") return Backend::Sequential;
  if (name == "threaded") return Backend::Threaded;
  throw InputError("unknown backend '" + std::string(name) + "'");
}

CommChannel::CommChannel(const Objective& objective, std::size_t node_count)
    : objective_(&objective), node_count_(node_count) {
  if (node_count == 0) throw InputError("a channel needs at least one node");
  ledger_.dimension = objective.dim();
}

void CommChannel::reset_ledger() {
  ledger_ = CommLedger{};
  ledger_.dimension = objective_->dim();
}

Vec CommChannel::reduce_vectors(const std::vector<NodeReply>& replies) {
  ++ledger_.vector_reductions;
  Vec out(objective_->dim(), 0.0);
  for (const auto& r : replies)
    if (!r.vector.empty()) axpy(1.0, r.vector, out);
  return out;
}

Vec CommChannel::reduce_vectors(const std::vector<NodeReply>& replies, std::span<const double> weights) {
  ++ledger_.vector_reductions;
  Vec out(objective_->dim(), 0.0);
  for (std::size_t p = 0; p < replies.size(); ++p)
    if (!replies[p].vector.empty()) axpy(weights[p], replies[p].vector, out);
  return out;
}

std::vector<double> CommChannel::reduce_scalars(const std::vector<NodeReply>& replies) {
  ++ledger_.scalar_reductions;
  std::vector<double> out;
  for (const auto& r : replies) {
    if (out.size() < r.scalars.size()) out.resize(r.scalars.size(), 0.0);
    for (std::size_t k = 0; k < r.scalars.size(); ++k) out[k] += r.scalars[k];
  }
  return out;
}

namespace {

std::vector<NodeState> make_nodes(const Objective& objective, const std::vector<Shard>& shards) {
  std::vector<NodeState> nodes(shards.size());
  for (std::size_t p = 0; p < shards.size(); ++p) {
    objective.check_shard(shards[p]);
    nodes[p].node_id = p;
    nodes[p].shard = shards[p];
  }
  return nodes;
}

}  // namespace

SequentialChannel::SequentialChannel(const Objective& objective, const std::vector<Shard>& shards)
    : CommChannel(objective, shards.size()), nodes_(make_nodes(objective, shards)) {}

std::vector<NodeReply> SequentialChannel::exchange(const NodeTask& task) {
  std::vector<NodeReply> replies(nodes_.size());
  for (std::size_t p = 0; p < nodes_.size(); ++p) replies[p] = task(nodes_[p]);
  return replies;
}

struct ThreadedChannel::Worker {
  std::vector<NodeState> nodes;
  std::mutex mu;
  std::condition_variable cv;
  const NodeTask* task = nullptr;
  std::vector<NodeReply>* replies = nullptr;
  std::vector<std::exception_ptr>* errors = nullptr;
  bool busy = false;
  bool stop = false;
  std::thread thread;

  void run() {
    std::unique_lock lock(mu);
    for (;;) {
      cv.wait(lock, [&] { return stop || busy; });
      if (stop) return;
      for (auto& node : nodes) {
        try {
          (*replies)[node.node_id] = (*task)(node);
        } catch (...) {
          (*errors)[node.node_id] = std::current_exception();
        }
      }
      busy = false;
      cv.notify_all();
    }
  }
};

ThreadedChannel::ThreadedChannel(const Objective& objective, const std::vector<Shard>& shards,
                                 std::size_t workers)
    : CommChannel(objective, shards.size()) {
  if (workers == 0) workers = default_worker_count(shards.size());
  workers = std::min(workers, shards.size());
  auto nodes = make_nodes(objective, shards);
  for (std::size_t w = 0; w < workers; ++w) workers_.push_back(std::make_unique<Worker>());
  for (auto& node : nodes) workers_[node.node_id % workers]->nodes.push_back(std::move(node));
  for (auto& w : workers_) w->thread = std::thread([wp = w.get()] { wp->run(); });
}

ThreadedChannel::~ThreadedChannel() {
  for (auto& w : workers_) {
    {
      std::lock_guard lock(w->mu);
      w->stop = true;
    }
    w->cv.notify_all();
  }
  for (auto& w : workers_) w->thread.join();
}

std::size_t ThreadedChannel::worker_count() const { return workers_.size(); }

std::vector<NodeReply> ThreadedChannel::exchange(const NodeTask& task) {
  std::vector<NodeReply> replies(node_count());
  std::vector<std::exception_ptr> errors(node_count());
  for (auto& w : workers_) {
    {
      std::lock_guard lock(w->mu);
      w->task = &task;
      w->replies = &replies;
      w->errors = &errors;
      w->busy = true;
    }
    w->cv.notify_all();
  }
  for (auto& w : workers_) {
    std::unique_lock lock(w->mu);
    w->cv.wait(lock, [&] { return !w->busy; });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return replies;
}

std::size_t default_worker_count(std::size_t node_count) {
  std::size_t n = 0;
  if (const char* env = std::getenv("FADL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) n = static_cast<std::size_t>(v);
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, node_count));
}

std::unique_ptr<CommChannel> make_channel(Backend backend, const Objective& objective,
                                          const std::vector<Shard>& shards, std::size_t workers) {
  if (backend == Backend::Sequential) return std::make_unique<SequentialChannel>(objective, shards);
  return std::make_unique<ThreadedChannel>(objective, shards, workers);
}

}  // namespace fadl
