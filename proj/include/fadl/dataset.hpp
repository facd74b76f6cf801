#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fadl/vector_ops.hpp"

namespace fadl {

struct SparseEntry {
  std::uint32_t index;  // 0-based feature id
  double value;

  bool operator==(const SparseEntry&) const = default;
};

/// One example's features. Indices strictly increasing, no stored zeros.
class SparseVector {
 public:
  SparseVector() = default;

  /// Validates the invariants; throws InputError on violation.
  explicit SparseVector(std::vector<SparseEntry> entries);

  std::span<const SparseEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// One past the largest stored index (0 when empty).
  std::size_t min_dimension() const { return entries_.empty() ? 0 : entries_.back().index + 1u; }

  double dot(std::span<const double> w) const {
    double s = 0.0;
    for (const auto& e : entries_) s += e.value * w[e.index];
    return s;
  }

  /// y += a * x
  void axpy_into(double a, std::span<double> y) const {
    for (const auto& e : entries_) y[e.index] += a * e.value;
  }

  double norm2_sq() const {
    double s = 0.0;
    for (const auto& e : entries_) s += e.value * e.value;
    return s;
  }

  bool operator==(const SparseVector&) const = default;

 private:
  std::vector<SparseEntry> entries_;
};

/// Index set of examples held by one node.
using Shard = std::vector<std::size_t>;

/// Immutable labelled sparse example matrix.
class Dataset {
 public:
  Dataset() = default;

  /// Throws InputError if sizes mismatch, labels are not +-1, or an index >= m.
  Dataset(std::vector<SparseVector> examples, std::vector<double> labels, std::size_t m);

  std::size_t n() const { return examples_.size(); }
  std::size_t m() const { return m_; }
  std::size_t nz() const { return nz_; }

  const SparseVector& x(std::size_t i) const { return examples_[i]; }
  double y(std::size_t i) const { return labels_[i]; }
  std::span<const SparseVector> examples() const { return examples_; }
  std::span<const double> labels() const { return labels_; }

  /// All example indices 0..n-1.
  Shard all_indices() const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<SparseVector> examples_;
  std::vector<double> labels_;
  std::size_t m_ = 0;
  std::size_t nz_ = 0;
};

}  // namespace fadl
