#include "fadl/cost_model.hpp"

#include <cmath>

#include "fadl/errors.hpp"

namespace fadl {

void CostParams::validate() const {
  for (double v : {c1, c2, c3, t_inner, t_outer, gamma, nz, m})
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("cost parameters must be finite and non-negative");
  if (!(nodes >= 1.0) || !std::isfinite(nodes)) throw InputError("node count must be at least 1");
}

CostParams sqm_profile(double nz, double m, double nodes, double gamma, double t_outer, double c2) {
  CostParams p;
  p.c1 = 2.0;
  p.c2 = c2;
  p.c3 = 1.0;
  p.t_inner = 1.0;
  p.t_outer = t_outer;
  p.gamma = gamma;
  p.nodes = nodes;
  p.nz = nz;
  p.m = m;
  return p;
}

CostParams fadl_profile(double nz, double m, double nodes, double gamma, double khat, double t_outer, double c2) {
  CostParams p = sqm_profile(nz, m, nodes, gamma, t_outer, c2);
  p.c3 = 2.0;
  p.t_inner = khat;
  return p;
}

double total_cost(const CostParams& p) {
  p.validate();
  return ((p.c1 * p.nz / p.nodes + p.c2 * p.m) * p.t_inner + p.c3 * p.gamma * p.m) * p.t_outer;
}

double communication_cost(const CostParams& p) {
  p.validate();
  return p.c3 * p.gamma * p.m * p.t_outer;
}

bool fadl_faster_predicate(double nz, double m, double gamma, double nodes, double khat) {
  if (!(nz > 0.0 && m > 0.0 && gamma > 0.0 && nodes > 0.0 && khat > 0.0))
    throw InputError("predicate inputs must all be positive");
  return nz / m < gamma * nodes / (2.0 * khat);
}

ConsistencyReport consistency_check(double nz, double m, double gamma, double nodes, double khat,
                                    double outer_ratio, bool include_c2) {
  ConsistencyReport rep;
  rep.predicate = fadl_faster_predicate(nz, m, gamma, nodes, khat);
  const double c2_sqm = include_c2 ? 7.0 : 0.0;
  const double c2_fadl = include_c2 ? 6.0 : 0.0;
  rep.fadl_cost = total_cost(fadl_profile(nz, m, nodes, gamma, khat, 1.0, c2_fadl));
  rep.sqm_cost = total_cost(sqm_profile(nz, m, nodes, gamma, outer_ratio, c2_sqm));
  rep.agrees = rep.predicate == (rep.fadl_cost < rep.sqm_cost);
  if (!(outer_ratio >= 3.0))
    rep.status = ConsistencyStatus::Indeterminate;
  else if (rep.predicate && !(rep.fadl_cost < rep.sqm_cost))
    rep.status = ConsistencyStatus::Inconsistent;
  else
    rep.status = ConsistencyStatus::Consistent;
  return rep;
}

}  // namespace fadl
