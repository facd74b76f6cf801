#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fadl {

struct VerifyOptions {
  std::optional<std::string> property;  // run only this one
  double tolerance_scale = 1.0;         // multiplies every built-in tolerance
  std::uint64_t seed = 2024;

  /// Throws InputError on a non-positive scale or an unknown property name.
  void validate() const;
};

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// gradient-consistency, hessian-vector, angle-lemma5, angle-lemma3,
/// glrc-envelope, svrg-identity, linesearch-interval, cost-predicate.
const std::vector<std::string>& property_names();

/// Runs the selected theory checks on small built-in instances against dense
/// oracles. Progress lines go to `log` when given.
std::vector<PropertyResult> run_verify(const VerifyOptions& options, std::ostream* log = nullptr);

}  // namespace fadl
