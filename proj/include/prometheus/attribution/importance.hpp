#pragma once

#include <span>
#include <vector>

#include "prometheus/explain/shapley.hpp"

namespace prometheus::attribution {

/// Indices with probability >= threshold and label 1.
std::vector<std::size_t> select_tp(std::span<const double> probabilities, std::span<const int> labels,
                                   double threshold = 0.5);

/// psi_c = sum_t ((1 - alpha) phi_ct + alpha |phi_ct|)
std::vector<double> local_aggregate(const explain::SaliencyMap& map, int alpha);

struct ChannelImportance {
  Matrix local;                // N_sel x C
  std::vector<double> global;  // C
  int alpha = 0;
  std::size_t n_instances = 0;
  // Static feature group, aggregated like one more channel when present.
  bool has_static = false;
  std::vector<double> local_static;
  double global_static = 0.0;
};

ChannelImportance global_aggregate(std::span<const explain::SaliencyMap> maps, int alpha = 0);

}  // namespace prometheus::attribution
