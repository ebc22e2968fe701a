#pragma once

#include <vector>

#include "prometheus/core/matrix.hpp"
#include "prometheus/core/station_graph.hpp"
#include "prometheus/nn/autograd.hpp"

namespace prometheus::nn {

/// h_v = max over neighbours u of activation(W * X_u), elementwise.
/// `ws_signals[s]` is station s as channels x T; W is out x channels.
/// Returns one out x T matrix per link.
std::vector<Matrix> gnn_max_aggregate(const std::vector<Matrix>& ws_signals, const StationGraph& graph,
                                      const Matrix& w, Activation activation);

}  // namespace prometheus::nn
