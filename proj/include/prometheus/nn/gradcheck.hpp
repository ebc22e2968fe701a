#pragma once

#include <cstdint>
#include <span>

#include "prometheus/nn/model.hpp"

namespace prometheus::nn {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

/// Compares backprop gradients of the weighted cross-entropy on `batch` with
/// central finite differences (step h) on `samples` randomly chosen scalar
/// parameters. Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult gradient_check(Network& net, const InstanceBatch& batch, std::span<const int> labels,
                               std::span<const double> weights, std::uint64_t seed,
                               std::size_t samples = 64, double h = 1e-4);

/// Builds `spec` with seed-derived weights and a random 3-instance batch,
/// then runs the check above.
GradCheckResult gradient_check(const ModelSpec& spec, std::uint64_t seed);

}  // namespace prometheus::nn
