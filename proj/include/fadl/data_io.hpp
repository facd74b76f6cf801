#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fadl/dataset.hpp"
#include "fadl/metrics.hpp"

namespace fadl {

struct LibsvmOptions {
  /// Feature dimension; defaults to the largest index seen. Must not be smaller.
  std::optional<std::size_t> dimension;
};

/// Reads "label idx:val ..." lines with 1-based increasing indices. Labels are
/// +1/-1; a 0 label is read as -1 and noted once in `warnings`. Blank lines and
/// '#' comments are skipped, explicit zero values dropped.
/// Throws ParseError (with the line number) on malformed lines or empty input.
Dataset parse_libsvm(std::istream& in, const LibsvmOptions& options = {}, std::vector<std::string>* warnings = nullptr);
/// Throws InputError if the file cannot be opened.
Dataset load_libsvm(const std::string& path, const LibsvmOptions& options = {},
                    std::vector<std::string>* warnings = nullptr);
/// Inverse of parse_libsvm; values printed in shortest round-trip form.
void write_libsvm(const Dataset& data, std::ostream& out);

enum class PartitionScheme { RoundRobin, ShuffledRoundRobin };

std::string_view to_string(PartitionScheme scheme);
PartitionScheme parse_partition_scheme(std::string_view name);

struct PartitionPlan {
  std::size_t nodes = 1;
  std::vector<std::size_t> assignment;  // example -> node
  std::uint64_t seed = 0;
  PartitionScheme scheme = PartitionScheme::RoundRobin;

  /// Per-node example lists, indices ascending.
  std::vector<Shard> shards() const;
};

/// Example k of the (optionally seed-shuffled) order goes to node k mod P.
/// Throws InputError unless 1 <= P <= n.
PartitionPlan partition(std::size_t n, std::size_t nodes, std::uint64_t seed, PartitionScheme scheme);

/// Sparse Gaussian features (each entry present with probability `density`,
/// at least one per example) labelled by a planted Gaussian weight vector; each
/// label is flipped with probability 1 - separability.
Dataset synth_classification(std::size_t n, std::size_t m, double density, double separability, std::uint64_t seed);

/// The planted weight vector used by synth_classification for (m, seed).
Vec synth_planted_weights(std::size_t m, std::uint64_t seed);

/// One JSON object per line.
void write_metrics(const RunMetrics& records, std::ostream& out);
/// Throws ParseError on a malformed line.
RunMetrics read_metrics(std::istream& in);

/// Tab-separated table with a header row; missing rel_gap is written as "-".
void write_metrics_table(const RunMetrics& records, std::ostream& out);
RunMetrics read_metrics_table(std::istream& in);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

}  // namespace fadl
