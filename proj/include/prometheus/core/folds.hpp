#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "prometheus/core/dataset.hpp"

namespace prometheus {

/// Half-open interval [begin, end) over the time axis.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct FoldSpec {
  int fold_id = 0;  // 0 -> F0
  IndexRange train;
  IndexRange val;
  IndexRange test;

  std::size_t extent() const { return test.end; }
  std::string name() const { return "F" + std::to_string(fold_id); }
  friend bool operator==(const FoldSpec&, const FoldSpec&) = default;
};

int parse_fold_id(const std::string& name);  // "F3" -> 3

/// Rolling-origin folds, returned F0 first. The last fold spans the whole
/// extent; each earlier fold keeps floor(90%) of its successor. Inside every
/// fold train and val take floor(70%) and floor(20%); test gets the rest.
std::vector<FoldSpec> rolling_origin_folds(std::size_t total_extent, int num_folds = 5);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

SplitIndices split_instances(const TimeSeriesDataset& data, const FoldSpec& fold);

}  // namespace prometheus
