#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace prometheus::eval {

struct ClassificationReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::string fold_id;
  std::string model_variant;
};

/// Confusion-matrix metrics for class 1; precision and recall are 0 when
/// their denominators vanish.
ClassificationReport prf1(std::span<const double> probabilities, std::span<const int> labels,
                          double threshold = 0.5);

}  // namespace prometheus::eval
