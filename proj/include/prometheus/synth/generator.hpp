#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "prometheus/core/dataset.hpp"
#include "prometheus/core/loader.hpp"
#include "prometheus/core/station_graph.hpp"

namespace prometheus::synth {

enum class Combination { And, Or };

std::string to_string(Combination c);
Combination combination_from_string(const std::string& s);

/// The planted failure mechanism: a day fails when the trigger channels of
/// the previous day exceed their thresholds (all of them for AND, any for OR).
struct FailureRule {
  std::vector<std::string> trigger_channels{"unavail_second", "bbe"};
  // Empty: thresholds are the `threshold_percentile` of each channel over the
  // burst-free link-days.
  std::vector<double> thresholds;
  double threshold_percentile = 99.0;
  Combination combination = Combination::And;
  double noise_flip_prob = 0.0;
};

struct SynthConfig {
  std::uint64_t seed = 1;
  int n_links = 50;
  int n_stations = 10;
  int n_days = 200;
  int window_days = 4;
  double target_failure_rate = 0.003;
  FailureRule failure_rule;
  double geometry_extent_km = 100.0;
  int k = 3;
  // Rate of single-trigger bursts relative to joint bursts. They exceed one
  // threshold without firing an AND rule.
  double distractor_ratio = 1.0;
  // When set, failure-causing bursts also spike this WS channel at the
  // link's nearest station.
  std::string coupled_ws_channel;
  std::string start_date = "2024-01-01";

  void validate() const;
};

struct GroundTruthRelevance {
  std::vector<int> relevant_channels;  // dataset channel indices
  std::vector<std::string> channel_names;
  int relevant_timestep = 0;
  std::vector<double> thresholds;
  Combination combination = Combination::And;
  double burst_probability = 0.0;
  double realized_failure_rate = 0.0;
};

struct SynthResult {
  SchemaConfig schema;
  RawTables tables;
  TimeSeriesDataset dataset;
  GroundTruthRelevance truth;
  StationGraph graph;
};

/// Deterministic in `config`. Calibrates the burst probability so the
/// windowed failure fraction lands within 20% of the target, else throws
/// GenerationError with the achieved rate.
SynthResult generate(const SynthConfig& config);

/// Writes rl_kpi.csv, ws.csv, static.csv, distances.csv and ground_truth.json.
void write_synth_outputs(const std::filesystem::path& dir, const SynthResult& result);

}  // namespace prometheus::synth
