#include "prometheus/synth/station_graph.hpp"

#include <algorithm>
#include <cmath>

#include "prometheus/core/error.hpp"

namespace prometheus::synth {

double euclidean_km(double ax, double ay, double bx, double by) {
  const double dx = ax - bx, dy = ay - by;
  return std::sqrt(dx * dx + dy * dy);
}

StationGraph knearest_stations(const Matrix& link_positions, const Matrix& station_positions, int k) {
  if (link_positions.cols() != 2 || station_positions.cols() != 2) {
    throw ShapeError("positions must be N x 2");
  }
  if (k < 1) throw ArgumentError("K must be >= 1");
  if (static_cast<std::size_t>(k) > station_positions.rows()) {
    throw ArgumentError("K=" + std::to_string(k) + " exceeds station count " +
                        std::to_string(station_positions.rows()));
  }
  StationGraph g;
  g.link_positions = link_positions;
  g.station_positions = station_positions;
  g.neighbors.resize(link_positions.rows());
  std::vector<std::pair<double, int>> dist(station_positions.rows());
  for (std::size_t l = 0; l < link_positions.rows(); ++l) {
    for (std::size_t s = 0; s < station_positions.rows(); ++s) {
      dist[s] = {euclidean_km(link_positions(l, 0), link_positions(l, 1), station_positions(s, 0),
                              station_positions(s, 1)),
                 static_cast<int>(s)};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (int i = 0; i < k; ++i) g.neighbors[l].push_back(dist[static_cast<std::size_t>(i)].second);
  }
  return g;
}

}  // namespace prometheus::synth
