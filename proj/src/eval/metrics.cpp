#include "prometheus/eval/metrics.hpp"

#include "prometheus/core/error.hpp"

namespace prometheus::eval {

ClassificationReport prf1(std::span<const double> probabilities, std::span<const int> labels,
                          double threshold) {
  if (probabilities.empty()) throw ArgumentError("prf1 needs at least one prediction");
  if (probabilities.size() != labels.size()) throw ArgumentError("prf1: probabilities and labels differ in length");
  ClassificationReport r;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = probabilities[i] >= threshold;
    const bool pos = labels[i] == 1;
    if (pred && pos) ++r.tp;
    else if (pred) ++r.fp;
    else if (pos) ++r.fn;
    else ++r.tn;
  }
  r.precision = r.tp + r.fp ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
  r.recall = r.tp + r.fn ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

}  // namespace prometheus::eval
