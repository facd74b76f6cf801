#pragma once

#include <cstdint>

namespace fadl {

/// Parameters of the abstract per-run cost
///   [(c1 nz/P + c2 m) T_inner + c3 gamma m] T_outer
/// in floating-point-operation units. Communication is a pipelined AllReduce,
/// so no log2(P) factor appears.
struct CostParams {
  double c1 = 2.0;  // data passes per inner iteration
  double c2 = 7.0;  // m-dimensional dot products per inner iteration
  double c3 = 1.0;  // m-vectors communicated per outer iteration
  double t_inner = 1.0;
  double t_outer = 1.0;
  double gamma = 100.0;  // communication / computation cost ratio
  double nodes = 1.0;
  double nz = 0.0;
  double m = 0.0;

  /// Throws InputError on negative or non-finite entries, or nodes < 1.
  void validate() const;
};

/// Profile rows of the cost-parameter table. c2 defaults to the midpoint of each range.
CostParams sqm_profile(double nz, double m, double nodes, double gamma, double t_outer, double c2 = 7.0);
CostParams fadl_profile(double nz, double m, double nodes, double gamma, double khat, double t_outer,
                        double c2 = 6.0);

double total_cost(const CostParams& params);
/// The c3 gamma m T_outer summand alone.
double communication_cost(const CostParams& params);

/// nz/m < gamma P / (2 khat): FADL predicted cheaper than SQM.
bool fadl_faster_predicate(double nz, double m, double gamma, double nodes, double khat);

enum class ConsistencyStatus {
  Consistent,     // predicate true implies the full formula favours FADL
  Inconsistent,   // predicate true but the full formula favours SQM
  Indeterminate,  // assumed T_outer ratio below 3
};

struct ConsistencyReport {
  ConsistencyStatus status = ConsistencyStatus::Indeterminate;
  bool predicate = false;
  double fadl_cost = 0.0;
  double sqm_cost = 0.0;
  /// predicate == (fadl_cost < sqm_cost); false flags a point where the loose
  /// closed-form condition and the full formula disagree.
  bool agrees = false;
};

/// Compares the closed-form predicate with total_cost of both profiles when
/// T_outer(SQM) = outer_ratio * T_outer(FADL). With include_c2 = false the c2 m
/// terms are dropped, as in the derivation of the predicate.
ConsistencyReport consistency_check(double nz, double m, double gamma, double nodes, double khat,
                                    double outer_ratio, bool include_c2 = false);

/// Pass and byte accounting for one run. Mutated only by the coordinator.
struct CommLedger {
  std::uint64_t vector_reductions = 0;
  std::uint64_t scalar_reductions = 0;
  std::uint64_t broadcast_vectors = 0;
  std::uint64_t broadcast_scalars = 0;
  std::uint64_t dimension = 0;

  /// 8 bytes per double for every m-length vector moved.
  std::uint64_t bytes_modeled() const { return 8 * dimension * (vector_reductions + broadcast_vectors); }
};

}  // namespace fadl
