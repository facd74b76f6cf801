#include "fadl/dataset.hpp"

#include <numeric>
#include <string>

#include "fadl/errors.hpp"

namespace fadl {

SparseVector::SparseVector(std::vector<SparseEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    if (entries_[k].value == 0.0) throw InputError("sparse vector stores an explicit zero");
    if (!std::isfinite(entries_[k].value)) throw InputError("sparse vector holds a non-finite value");
    if (k > 0 && entries_[k].index <= entries_[k - 1].index)
      throw InputError("sparse vector indices must be strictly increasing");
  }
}

Dataset::Dataset(std::vector<SparseVector> examples, std::vector<double> labels, std::size_t m)
    : examples_(std::move(examples)), labels_(std::move(labels)), m_(m) {
  if (examples_.size() != labels_.size())
    throw InputError("dataset has " + std::to_string(examples_.size()) + " examples but " +
                     std::to_string(labels_.size()) + " labels");
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    if (labels_[i] != 1.0 && labels_[i] != -1.0)
      throw InputError("label of example " + std::to_string(i) + " is not +1/-1");
    if (examples_[i].min_dimension() > m_)
      throw InputError("example " + std::to_string(i) + " has a feature index >= m");
    nz_ += examples_[i].size();
  }
}

Shard Dataset::all_indices() const {
  Shard s(n());
  std::iota(s.begin(), s.end(), std::size_t{0});
  return s;
}

}  // namespace fadl
