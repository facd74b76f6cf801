#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fadl/approx.hpp"
#include "fadl/comm.hpp"
#include "fadl/linesearch.hpp"
#include "fadl/local_opt.hpp"
#include "fadl/metrics.hpp"
#include "fadl/objective.hpp"

namespace fadl {

enum class Method { FADL, SQM };
enum class CombineWeights { Uniform, Proportional };
enum class WarmStart { Zero, LocalSgdAverage };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
std::string_view to_string(CombineWeights weights);
CombineWeights parse_combine_weights(std::string_view name);
std::string_view to_string(WarmStart warm);
WarmStart parse_warm_start(std::string_view name);

struct RunConfig {
  Method method = Method::FADL;
  ApproxFamily family = ApproxFamily::Quadratic;
  std::size_t nodes = 1;
  double eps_g = 1e-3;  // stop when ||g_r|| <= eps_g ||g_0||
  int max_outer = 200;
  CombineWeights combine = CombineWeights::Uniform;
  std::uint64_t seed = 1;
  LineSearchConfig linesearch;
  InnerOptimizerConfig inner;
  WarmStart warm_start = WarmStart::Zero;
  int warm_epochs = 5;
  std::optional<double> f_star;      // enables rel_gap
  std::optional<double> target_gap;  // also stop once rel_gap <= target_gap
  /// When set, every combined direction must satisfy the angle condition with
  /// this theta (radians); otherwise only -g.d > 0 is required.
  std::optional<double> angle_theta;
  double sqm_cg_tol = 0.1;
  int sqm_cg_max = 250;
  double gamma = 100.0;  // communication cost ratio for modeled cost units
  std::string run_id = "run";

  /// Throws InputError on eps_g outside (0,1), nodes < 1, max_outer < 0,
  /// target_gap without f_star, or invalid nested configs.
  void validate() const;
};

enum class StopReason { GradientTolerance, TargetGap, MaxOuter, Stalled };

std::string_view to_string(StopReason reason);

struct RunResult {
  Vec w;
  RunMetrics metrics;
  StopReason stop = StopReason::MaxOuter;
  CommLedger ledger;
};

/// FADL outer loop over the channel's nodes. w0 defaults to zero or the warm
/// start chosen in the config. Throws StagnationError when the combined
/// direction is not a descent direction, LineSearchError from the line search.
RunResult run_fadl(const RunConfig& config, CommChannel& comm, std::optional<Vec> w0 = std::nullopt);

/// Distributed-gradient TRON on the full objective. Every gradient and
/// Hessian-vector product is a reduction over the channel. One metrics row per
/// accepted step.
RunResult run_sqm(const RunConfig& config, CommChannel& comm, std::optional<Vec> w0 = std::nullopt);

/// Dispatches on config.method.
RunResult run(const RunConfig& config, CommChannel& comm, std::optional<Vec> w0 = std::nullopt);

/// sum_p weights_p d_p. Empty entries count as zero directions. Throws
/// StagnationError unless -g.d > 0, InputError unless the weights are convex.
Vec combine_directions(const std::vector<Vec>& directions, std::span<const double> weights,
                       std::span<const double> g);

/// Per-node convex weights for the channel's shards.
std::vector<double> node_weights(CombineWeights scheme, const std::vector<std::size_t>& shard_sizes);

/// Each node runs `epochs` passes of plain SGD on lambda/(2P) ||w||^2 + L_p
/// from zero; the results are averaged uniformly. One vector reduction.
Vec warm_start_average(CommChannel& comm, int epochs, std::uint64_t seed);

/// Shards with indices sorted and ordered by their smallest index, so node ids
/// do not depend on how the shards were labelled.
std::vector<Shard> canonical_shards(std::vector<Shard> shards);

/// Optimal value of f from a single-node quadratic-family run (Newton-CG
/// directions with the line search) stopped at ||g|| <= tol ||g_0||, or once
/// no further decrease is representable.
double reference_optimum(const Objective& objective, double tol = 1e-12, int max_iters = 2000);

}  // namespace fadl
