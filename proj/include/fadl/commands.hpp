#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fadl/comm.hpp"
#include "fadl/data_io.hpp"
#include "fadl/engine.hpp"
#include "fadl/loss.hpp"
#include "fadl/verify.hpp"

namespace fadl {

/// Process exit codes of the command-line tool.
/// 0 success, 1 usage or input error, 2 stagnation or line-search failure,
/// 3 a verification property failed.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitStagnation = 2, kExitCheckFailed = 3 };

struct SynthSpec {
  std::size_t n = 2000;
  std::size_t m = 100;
  double density = 0.1;
  double separability = 0.9;
  std::uint64_t seed = 1;
};

/// Where the examples come from: a LIBSVM file or the synthetic generator.
struct DataSource {
  std::optional<std::string> path;
  std::optional<std::size_t> dimension;  // LIBSVM dimension override
  std::optional<SynthSpec> synth;

  /// Throws InputError unless exactly one source is set.
  void validate() const;
};

struct Experiment {
  DataSource data;
  LossKind loss = LossKind::Logistic;
  double lambda = 1e-2;
  PartitionScheme scheme = PartitionScheme::ShuffledRoundRobin;
  Backend backend = Backend::Sequential;
  std::size_t threads = 0;  // threaded backend workers; 0 = default
  bool reference = false;   // compute f* with a long reference solve
  RunConfig run;
};

struct TrainOptions {
  Experiment experiment;
  std::optional<std::string> metrics_path;  // JSONL; stdout when absent
  std::optional<std::string> table_path;    // TSV
};

struct CompareOptions {
  Experiment experiment;
  /// "fadl:<family>" or "sqm", at least one.
  std::vector<std::string> methods;
  std::optional<std::string> metrics_path;
};

struct CostSweepOptions {
  std::vector<double> gamma;
  std::vector<double> nodes;
  std::vector<double> khat;
  /// (name, nz, m) triples
  struct Dims {
    std::string name;
    double nz;
    double m;
  };
  std::vector<Dims> dims;
  double outer_ratio = 4.0;  // T_outer(SQM) / T_outer(FADL)
};

/// Parses "name=nz:m" or "nz:m". Throws InputError.
CostSweepOptions::Dims parse_dims(const std::string& text);
/// nz and m of five public LIBSVM datasets (kdd2010, url, webspam, mnist8m, rcv).
std::vector<CostSweepOptions::Dims> known_dataset_dims();

Dataset load_dataset(const DataSource& source, std::ostream& err);

/// Each command writes machine-readable output to `out` and diagnostics to `err`.
int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareOptions& options, std::ostream& out, std::ostream& err);
int cmd_cost_sweep(const CostSweepOptions& options, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyOptions& options, std::ostream& out, std::ostream& err);

}  // namespace fadl
