#include "prometheus/core/folds.hpp"

#include "prometheus/core/error.hpp"

namespace prometheus {

int parse_fold_id(const std::string& name) {
  if (name.size() < 2 || (name[0] != 'F' && name[0] != 'f')) {
    throw ArgumentError("fold must look like F0..F4, got '" + name + "'");
  }
  int id = 0;
  for (std::size_t i = 1; i < name.size(); ++i) {
    if (name[i] < '0' || name[i] > '9') throw ArgumentError("bad fold name '" + name + "'");
    id = id * 10 + (name[i] - '0');
  }
  return id;
}

std::vector<FoldSpec> rolling_origin_folds(std::size_t total_extent, int num_folds) {
  if (num_folds < 1) throw ArgumentError("num_folds must be >= 1");
  if (total_extent < static_cast<std::size_t>(num_folds) * 10) {
    throw ArgumentError("total_extent " + std::to_string(total_extent) +
                        " too small for " + std::to_string(num_folds) + " folds");
  }
  std::vector<FoldSpec> folds(static_cast<std::size_t>(num_folds));
  std::size_t extent = total_extent;
  for (int id = num_folds - 1; id >= 0; --id) {
    const std::size_t train = extent * 7 / 10;
    const std::size_t val = extent * 2 / 10;
    FoldSpec& f = folds[static_cast<std::size_t>(id)];
    f.fold_id = id;
    f.train = {0, train};
    f.val = {train, train + val};
    f.test = {train + val, extent};
    extent = extent * 9 / 10;
  }
  return folds;
}

SplitIndices split_instances(const TimeSeriesDataset& data, const FoldSpec& fold) {
  if (fold.extent() > data.time_extent) {
    throw ArgumentError("fold " + fold.name() + " extends past the dataset time axis");
  }
  SplitIndices s;
  for (std::size_t i = 0; i < data.n; ++i) {
    const std::size_t d = data.instance_meta[i].day_index;
    if (fold.train.contains(d)) {
      s.train.push_back(i);
    } else if (fold.val.contains(d)) {
      s.val.push_back(i);
    } else if (fold.test.contains(d)) {
      s.test.push_back(i);
    }
  }
  return s;
}

}  // namespace prometheus
