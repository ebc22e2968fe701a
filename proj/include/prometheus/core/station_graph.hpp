#pragma once

#include <string>
#include <vector>

#include "prometheus/core/matrix.hpp"

namespace prometheus {

/// Link-to-weather-station neighbourhood. Positions are in km and may be
/// empty when the graph was rebuilt from a distances table.
struct StationGraph {
  std::vector<std::string> link_ids;
  std::vector<std::string> station_ids;
  Matrix link_positions;     // links x 2
  Matrix station_positions;  // stations x 2
  // neighbors[l] holds K distinct station indices by ascending distance.
  std::vector<std::vector<int>> neighbors;

  std::size_t k() const { return neighbors.empty() ? 0 : neighbors.front().size(); }
};

}  // namespace prometheus
