#include "prometheus/nn/gnn.hpp"

#include <algorithm>

#include "prometheus/core/error.hpp"

namespace prometheus::nn {

std::vector<Matrix> gnn_max_aggregate(const std::vector<Matrix>& ws_signals, const StationGraph& graph,
                                      const Matrix& w, Activation activation) {
  if (ws_signals.empty()) throw ShapeError("no station signals");
  const std::size_t channels = ws_signals.front().rows();
  const std::size_t steps = ws_signals.front().cols();
  for (const Matrix& x : ws_signals) {
    if (x.rows() != channels || x.cols() != steps) {
      throw ShapeError("station signal " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                       " differs from " + std::to_string(channels) + "x" + std::to_string(steps));
    }
  }
  if (w.cols() != channels) {
    throw ShapeError("W is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                     " but stations carry " + std::to_string(channels) + " channels");
  }
  std::vector<Matrix> out;
  out.reserve(graph.neighbors.size());
  for (std::size_t l = 0; l < graph.neighbors.size(); ++l) {
    const auto& nb = graph.neighbors[l];
    if (nb.empty()) throw ShapeError("link " + std::to_string(l) + " has no neighbours");
    Matrix h;
    for (int u : nb) {
      if (u < 0 || static_cast<std::size_t>(u) >= ws_signals.size()) {
        throw ShapeError("neighbour index " + std::to_string(u) + " outside " +
                         std::to_string(ws_signals.size()) + " stations");
      }
      Matrix z(w.rows(), steps);
      matmul_acc(w, ws_signals[static_cast<std::size_t>(u)], z);
      for (double& v : z.data()) v = activate(activation, v);
      if (h.empty()) {
        h = std::move(z);
      } else {
        for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = std::max(h.data()[i], z.data()[i]);
      }
    }
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace prometheus::nn
