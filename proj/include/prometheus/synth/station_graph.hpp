#pragma once

#include "prometheus/core/matrix.hpp"
#include "prometheus/core/station_graph.hpp"

namespace prometheus::synth {

double euclidean_km(double ax, double ay, double bx, double by);

/// K nearest stations per link by Euclidean distance; ties go to the lower
/// station index. Throws ArgumentError when K exceeds the station count.
StationGraph knearest_stations(const Matrix& link_positions, const Matrix& station_positions, int k);

}  // namespace prometheus::synth
