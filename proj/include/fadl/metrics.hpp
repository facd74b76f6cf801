#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fadl {

/// State of a run at w_r. Counters are cumulative from the start of the run.
struct MetricsRecord {
  std::string run_id;
  std::string method;  // "fadl" or "sqm"
  std::string family;  // approximation family, "-" for sqm
  std::uint64_t nodes = 1;
  std::uint64_t r = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  std::optional<double> rel_gap;  // (f - f*) / f*, when f* is known
  std::uint64_t comm_passes = 0;  // m-vector reductions so far
  std::uint64_t probes = 0;       // line-search evaluations so far
  std::uint64_t inner_iters = 0;  // inner iterations (FADL, summed over nodes) or CG steps (SQM)
  double elapsed_seconds = 0.0;
  double cost_units = 0.0;  // modeled cost so far
  double step = 0.0;        // step that produced w_r (0 for r = 0)
  double cos_angle = 0.0;   // cos angle(-g_{r-1}, d_{r-1}) (0 for r = 0)

  bool operator==(const MetricsRecord&) const = default;
};

using RunMetrics = std::vector<MetricsRecord>;

/// Equality of everything except wall time.
bool same_trajectory(const RunMetrics& a, const RunMetrics& b);

}  // namespace fadl
